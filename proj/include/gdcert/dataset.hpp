#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "gdcert/matrix.hpp"

namespace gdcert {

// n training inputs (rows of `inputs`, each in the closed unit ball) with
// scalar targets strictly inside (-kappa, kappa).
struct Dataset {
    Matrix inputs;  // n x d
    Vector targets;
    double kappa = 1.0;

    std::size_t n() const { return inputs.rows(); }
    std::size_t d() const { return inputs.cols(); }
    std::span<const double> x(std::size_t i) const { return inputs.row(i); }
};

inline constexpr double kMinPairDistance = 1e-9;
inline constexpr double kNormSlack = 1e-12;

// Names the dataset invariant that failed: "shape", "finite", "norm_bound",
// "distinct", "target_bound" or "header".
class DatasetError : public std::runtime_error {
public:
    DatasetError(std::string invariant, const std::string& detail)
        : std::runtime_error("dataset invariant '" + invariant + "' violated: " + detail),
          invariant_(std::move(invariant)) {}
    const std::string& invariant() const { return invariant_; }

private:
    std::string invariant_;
};

void validate_dataset(const Dataset& data);

// Header row, then one row per example: d feature columns and the target.
Dataset load_dataset(const std::filesystem::path& path, double kappa);
std::string format_dataset(const Dataset& data);

}  // namespace gdcert
