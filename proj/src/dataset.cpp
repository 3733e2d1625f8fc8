#include "surrosens/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "surrosens/error.hpp"
#include "surrosens/io.hpp"

namespace surrosens {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

bool numbered_name(std::string_view name, char prefix) {
    if (name.size() < 2 || name[0] != prefix) return false;
    return std::all_of(name.begin() + 1, name.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string_view trim(std::string_view v) {
    while (!v.empty() && (v.back() == '\r' || v.back() == ' ')) v.remove_suffix(1);
    while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
    return v;
}

}  // namespace

std::vector<std::size_t> CombinedDataset::indices(SampleTag tag) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rows(); ++i)
        if (sample[i] == tag) out.push_back(i);
    return out;
}

CombinedDataset CombinedDataset::select(const std::vector<std::size_t>& idx) const {
    CombinedDataset out;
    out.s_names = s_names;
    out.x_names = x_names;
    out.s.resize(static_cast<Eigen::Index>(idx.size()), s.cols());
    out.x.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto i = idx[r];
        out.sample.push_back(sample[i]);
        out.w.push_back(w[i]);
        out.y.push_back(y[i]);
        out.s.row(static_cast<Eigen::Index>(r)) = s.row(static_cast<Eigen::Index>(i));
        out.x.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(i));
    }
    return out;
}

bool CombinedDataset::binary_outcome() const {
    bool any = false;
    for (std::size_t i = 0; i < rows(); ++i) {
        if (experimental(i)) continue;
        if (y[i] != 0.0 && y[i] != 1.0) return false;
        any = true;
    }
    return any;
}

void validate(const CombinedDataset& d) {
    const std::size_t n = d.rows();
    if (d.w.size() != n || d.y.size() != n || static_cast<std::size_t>(d.s.rows()) != n ||
        static_cast<std::size_t>(d.x.rows()) != n)
        throw data_error("dataset columns have inconsistent lengths");
    if (d.k() < 1) throw data_error("dataset needs at least one surrogate column");
    if (d.m() < 1) throw data_error("dataset needs at least one covariate column");
    if (d.s_names.size() != d.k() || d.x_names.size() != d.m()) throw data_error("column names do not match data");
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = i + 1;
        if (d.experimental(i)) {
            if (d.w[i] != 0 && d.w[i] != 1) throw data_error(fmt::format("row {}: experimental row needs w in {{0,1}}", row));
            if (!std::isnan(d.y[i])) throw data_error(fmt::format("row {}: experimental row must not carry y", row));
        } else {
            if (d.w[i] != -1) throw data_error(fmt::format("row {}: observational row must not carry w", row));
            if (!std::isfinite(d.y[i])) throw data_error(fmt::format("row {}: observational row needs a finite y", row));
        }
        if (!d.s.row(static_cast<Eigen::Index>(i)).allFinite() || !d.x.row(static_cast<Eigen::Index>(i)).allFinite())
            throw data_error(fmt::format("row {}: surrogates and covariates must be finite", row));
    }
}

CombinedDataset parse_dataset(std::istream& in, const std::string& source, const LoadOptions& opts) {
    std::string line;
    if (!std::getline(in, line)) throw data_error(source + ": empty file");
    const auto header = split_fields(trim(line));
    if (header.size() < 5 || trim(header[0]) != "sample" || trim(header[1]) != "w" || trim(header[2]) != "y")
        throw data_error(source + ": header must start with sample,w,y");
    CombinedDataset d;
    for (std::size_t c = 3; c < header.size(); ++c) {
        const auto name = trim(header[c]);
        if (numbered_name(name, 's') && d.x_names.empty()) {
            d.s_names.emplace_back(name);
        } else if (numbered_name(name, 'x')) {
            d.x_names.emplace_back(name);
        } else {
            throw data_error(fmt::format("{}: column '{}' is not of the form s<k> (before covariates) or x<m>", source, name));
        }
    }
    if (d.s_names.empty() || d.x_names.empty()) throw data_error(source + ": need at least one s and one x column");
    const std::size_t k = d.s_names.size();
    const std::size_t m = d.x_names.size();

    std::vector<double> s_vals;
    std::vector<double> x_vals;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        const auto text = trim(line);
        if (text.empty()) continue;
        ++row;
        const auto f = split_fields(text);
        if (f.size() != header.size())
            throw data_error(fmt::format("{}: row {} has {} fields, expected {}", source, row, f.size(), header.size()));
        const auto tag = trim(f[0]);
        const auto wf = trim(f[1]);
        const auto yf = trim(f[2]);
        int w = -1;
        double y = kNaN;
        if (!wf.empty()) {
            if (wf == "0") w = 0;
            else if (wf == "1") w = 1;
            else throw data_error(fmt::format("{}: row {} column 'w' is not binary", source, row));
        }
        if (!yf.empty() && !parse_double(yf, y))
            throw data_error(fmt::format("{}: row {} column 'y' is not a finite number", source, row));
        if (opts.split) {
            if (w < 0 || std::isnan(y))
                throw data_error(fmt::format("{}: row {} needs both w and y for splitting", source, row));
            d.sample.push_back(SampleTag::Experimental);
        } else if (tag == "E") {
            if (!std::isnan(y)) throw data_error(fmt::format("{}: row {} is experimental but carries y", source, row));
            if (w < 0) throw data_error(fmt::format("{}: row {} is experimental but lacks w", source, row));
            d.sample.push_back(SampleTag::Experimental);
        } else if (tag == "O") {
            if (w >= 0) throw data_error(fmt::format("{}: row {} is observational but carries w", source, row));
            if (std::isnan(y)) throw data_error(fmt::format("{}: row {} is observational but lacks y", source, row));
            d.sample.push_back(SampleTag::Observational);
        } else {
            throw data_error(fmt::format("{}: row {} column 'sample' must be E or O", source, row));
        }
        d.w.push_back(w);
        d.y.push_back(y);
        for (std::size_t c = 0; c < k + m; ++c) {
            double v = 0.0;
            const auto& name = c < k ? d.s_names[c] : d.x_names[c - k];
            if (!parse_double(trim(f[3 + c]), v))
                throw data_error(fmt::format("{}: row {} column '{}' is missing or not a finite number", source, row, name));
            (c < k ? s_vals : x_vals).push_back(v);
        }
    }
    if (row == 0) throw data_error(source + ": no data rows");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    d.s = Eigen::Map<RowMajor>(s_vals.data(), static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(k));
    d.x = Eigen::Map<RowMajor>(x_vals.data(), static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(m));

    if (opts.split) {
        std::vector<std::size_t> order(row);
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(opts.split_seed);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t r = 0; r < row; ++r) {
            const auto i = order[r];
            if (r < row / 2) {
                d.y[i] = kNaN;
            } else {
                d.sample[i] = SampleTag::Observational;
                d.w[i] = -1;
            }
        }
    }
    validate(d);
    return d;
}

CombinedDataset load_dataset(const std::filesystem::path& path, const LoadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open dataset " + path.string());
    return parse_dataset(in, path.string(), opts);
}

std::string dataset_to_csv(const CombinedDataset& d) {
    std::string out = "sample,w,y";
    for (const auto& n : d.s_names) out += "," + n;
    for (const auto& n : d.x_names) out += "," + n;
    out += '\n';
    for (std::size_t i = 0; i < d.rows(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out += d.experimental(i) ? "E," : "O,";
        if (d.w[i] >= 0) out += d.w[i] ? '1' : '0';
        out += ',';
        if (!std::isnan(d.y[i])) out += format_double(d.y[i]);
        for (Eigen::Index c = 0; c < d.s.cols(); ++c) out += "," + format_double(d.s(r, c));
        for (Eigen::Index c = 0; c < d.x.cols(); ++c) out += "," + format_double(d.x(r, c));
        out += '\n';
    }
    return out;
}

void write_dataset(const CombinedDataset& data, const std::filesystem::path& path) {
    validate(data);
    write_file_atomic(path, dataset_to_csv(data));
}

}  // namespace surrosens
