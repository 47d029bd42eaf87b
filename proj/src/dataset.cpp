#include "gdcert/dataset.hpp"

#include <charconv>
#include <cmath>

#include "gdcert/io.hpp"

namespace gdcert {

namespace {

bool is_number(const std::string& field) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    return ec == std::errc() && ptr == field.data() + field.size();
}

}  // namespace

void validate_dataset(const Dataset& data) {
    const std::size_t n = data.n();
    if (n == 0 || data.d() == 0) {
        throw DatasetError("shape", "need at least one example and one feature");
    }
    if (data.targets.size() != n) {
        throw DatasetError("shape", std::to_string(n) + " inputs but " +
                                        std::to_string(data.targets.size()) + " targets");
    }
    if (!all_finite(data.inputs.data()) || !all_finite(data.targets) ||
        !std::isfinite(data.kappa)) {
        throw DatasetError("finite", "non-finite value in dataset");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double norm = norm2(data.x(i));
        if (norm > 1.0 + kNormSlack) {
            throw DatasetError("norm_bound", "||x_" + std::to_string(i) +
                                                 "|| = " + format_double(norm) + " > 1");
        }
        if (!(std::abs(data.targets[i]) < data.kappa)) {
            throw DatasetError("target_bound", "|y_" + std::to_string(i) + "| = " +
                                                   format_double(std::abs(data.targets[i])) +
                                                   " is not below kappa = " +
                                                   format_double(data.kappa));
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < data.d(); ++k) {
                const double diff = data.inputs(i, k) - data.inputs(j, k);
                s += diff * diff;
            }
            if (std::sqrt(s) <= kMinPairDistance) {
                throw DatasetError("distinct", "inputs " + std::to_string(i) + " and " +
                                                   std::to_string(j) + " coincide");
            }
        }
    }
}

Dataset load_dataset(const std::filesystem::path& path, double kappa) {
    const std::string text = read_file(path);
    const auto first_line_end = text.find('\n');
    const auto header = split_fields(std::string_view(text).substr(0, first_line_end));
    bool numeric_header = !header.empty();
    for (const auto& f : header) {
        numeric_header = numeric_header && is_number(f);
    }
    if (header.empty() || numeric_header) {
        throw DatasetError("header", path.string() + ": header row required");
    }
    Matrix table;
    try {
        table = parse_table(text, true);
    } catch (const std::runtime_error& e) {
        throw DatasetError("shape", path.string() + ": " + e.what());
    }
    if (table.cols() != header.size()) {
        throw DatasetError("shape", path.string() + ": header has " +
                                        std::to_string(header.size()) + " columns, data has " +
                                        std::to_string(table.cols()));
    }
    if (table.cols() < 2) {
        throw DatasetError("shape", path.string() + ": need feature columns and a target column");
    }
    Dataset data;
    data.kappa = kappa;
    data.inputs = Matrix(table.rows(), table.cols() - 1);
    data.targets.resize(table.rows());
    for (std::size_t i = 0; i < table.rows(); ++i) {
        for (std::size_t j = 0; j + 1 < table.cols(); ++j) {
            data.inputs(i, j) = table(i, j);
        }
        data.targets[i] = table(i, table.cols() - 1);
    }
    validate_dataset(data);
    return data;
}

std::string format_dataset(const Dataset& data) {
    Matrix table(data.n(), data.d() + 1);
    std::vector<std::string> header;
    for (std::size_t j = 0; j < data.d(); ++j) {
        header.push_back("x" + std::to_string(j + 1));
    }
    header.emplace_back("y");
    for (std::size_t i = 0; i < data.n(); ++i) {
        for (std::size_t j = 0; j < data.d(); ++j) {
            table(i, j) = data.inputs(i, j);
        }
        table(i, data.d()) = data.targets[i];
    }
    return format_table(table, header);
}

}  // namespace gdcert
