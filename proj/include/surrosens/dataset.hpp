#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace surrosens {

enum class SampleTag { Experimental, Observational };

/// Experimental rows carry w and no y; observational rows carry y and no w.
/// Absent w is stored as -1, absent y as NaN.
struct CombinedDataset {
    std::vector<std::string> s_names;
    std::vector<std::string> x_names;
    std::vector<SampleTag> sample;
    std::vector<int> w;
    std::vector<double> y;
    Eigen::MatrixXd s;  // rows x k
    Eigen::MatrixXd x;  // rows x m

    std::size_t rows() const { return sample.size(); }
    std::size_t k() const { return static_cast<std::size_t>(s.cols()); }
    std::size_t m() const { return static_cast<std::size_t>(x.cols()); }
    bool experimental(std::size_t i) const { return sample[i] == SampleTag::Experimental; }

    /// Row indices of one sample.
    std::vector<std::size_t> indices(SampleTag tag) const;

    /// Subset in the given row order.
    CombinedDataset select(const std::vector<std::size_t>& rows) const;

    /// True when every observed y is 0 or 1.
    bool binary_outcome() const;
};

/// Throws Error(Data) naming the first offending row (1-based, header excluded).
void validate(const CombinedDataset& data);

struct LoadOptions {
    /// Input rows carry both w and y; they are shuffled and split evenly into
    /// an experimental half (y dropped) and an observational half (w dropped).
    bool split = false;
    std::uint64_t split_seed = 0;
};

/// CSV with header sample,w,y,s1..sk,x1..xm; empty field = missing.
CombinedDataset parse_dataset(std::istream& in, const std::string& source = "<stream>", const LoadOptions& opts = {});
CombinedDataset load_dataset(const std::filesystem::path& path, const LoadOptions& opts = {});

std::string dataset_to_csv(const CombinedDataset& data);
void write_dataset(const CombinedDataset& data, const std::filesystem::path& path);

}  // namespace surrosens
