#pragma once

#include "regbal/dataset.hpp"
#include "regbal/functional.hpp"

#include <cstdint>
#include <string_view>

namespace regbal {

/// Amplitude convention for random Fourier features.
///   Kernel: psi_k = sqrt(2/m) cos(w_k.z + b_k), so psi(z).psi(z') ~ k(z, z').
///   Unit:   psi_k = sqrt(2)   cos(w_k.z + b_k), unit second moment per column,
///           the same scale as an intercept column.
enum class FeatureScale { Kernel, Unit };

/// Frozen random Fourier feature map for the Gaussian kernel
/// exp(-|z - z'|^2 / (2 bandwidth^2)).
class FeatureMap {
public:
    /// Construction from explicit parameters. `frequencies` is m x p; m may be
    /// zero only when the intercept is on.
    FeatureMap(Eigen::MatrixXd frequencies, Eigen::VectorXd offsets, double bandwidth,
               bool include_intercept = true, FeatureScale scale = FeatureScale::Kernel,
               std::uint64_t seed = 0);

    Eigen::Index p() const { return frequencies_.cols(); }
    Eigen::Index m() const { return frequencies_.rows(); }
    /// Number of covariate basis columns: m, plus one with the intercept.
    Eigen::Index q() const { return m() + (include_intercept_ ? 1 : 0); }
    double bandwidth() const { return bandwidth_; }
    bool include_intercept() const { return include_intercept_; }
    FeatureScale scale() const { return scale_; }
    std::uint64_t seed() const { return seed_; }
    const Eigen::MatrixXd& frequencies() const { return frequencies_; }
    const Eigen::VectorXd& offsets() const { return offsets_; }

    /// Per-feature amplitude bound: sqrt(2/m) or sqrt(2).
    double amplitude() const;

    /// psi(z) for each row of z, never including the intercept (n x m).
    Eigen::MatrixXd features(const Eigen::MatrixXd& z) const;

    /// Copy with the intercept flag changed.
    FeatureMap with_intercept(bool on) const;

    /// Bitwise equality of all parameters.
    friend bool operator==(const FeatureMap& a, const FeatureMap& b);

private:
    Eigen::MatrixXd frequencies_;
    Eigen::VectorXd offsets_;
    double bandwidth_;
    bool include_intercept_;
    FeatureScale scale_;
    std::uint64_t seed_;
};

/// Frequencies ~ N(0, I / bandwidth^2), offsets ~ U[0, 2 pi), drawn from `seed`.
FeatureMap make_feature_map(Eigen::Index p, Eigen::Index m, double bandwidth, std::uint64_t seed,
                            bool include_intercept = true,
                            FeatureScale scale = FeatureScale::Kernel);

/// [1 | psi(z)] (intercept first when enabled), n x q.
Eigen::MatrixXd eval_covariate_basis(const FeatureMap& map, const Eigen::MatrixXd& z);

enum class BalancingScheme { Covariate, Regressor };

std::string_view to_string(BalancingScheme s);
BalancingScheme parse_scheme(std::string_view name);

/// Balancing basis evaluated on a sample.
///   columns:           Phi_j(D_i, Z_i)
///   counterfactual_m:  m(W_i; Phi_j)
///   offset_vals:       fixed part of the representer, alpha = offset + Phi beta
struct BalancingBasis {
    Eigen::MatrixXd columns;
    Eigen::MatrixXd counterfactual_m;
    Eigen::VectorXd offset_vals;
};

/// Regressor + Ate:  [d psi | (1-d) psi], m = [psi | -psi], offset 0.
/// Covariate + Ate:  [psi], m = 0, offset 2(2d - 1).
/// AttMean (either): [(1-d) psi], m = (d / pbar) psi, offset 0.
BalancingBasis eval_balancing_basis(const FeatureMap& map, BalancingScheme scheme,
                                    const Dataset& data, Functional functional);

/// Columns of eval_balancing_basis only; needs no pbar, so it can be
/// evaluated on any sample.
Eigen::MatrixXd balancing_columns(const FeatureMap& map, BalancingScheme scheme,
                                  Functional functional, const Eigen::VectorXd& d,
                                  const Eigen::MatrixXd& z);

/// Offsets of eval_balancing_basis.
Eigen::VectorXd representer_offset(BalancingScheme scheme, Functional functional,
                                   const Eigen::VectorXd& d);

}  // namespace regbal
