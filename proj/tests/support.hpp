#pragma once

#include "regbal/dataset.hpp"
#include "regbal/features.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace regbal::testing {

/// Random dataset with both arms present and an oracle. Treatment follows a
/// logistic score in z1 so arms differ in distribution.
inline Dataset random_dataset(std::uint64_t seed, Eigen::Index n, Eigen::Index p,
                              bool with_oracle = true) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Eigen::MatrixXd z(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) z(i, j) = normal(rng);
    }
    Eigen::VectorXd d(n), y(n), mu0(n), mu1(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double e = 1.0 / (1.0 + std::exp(-0.7 * z(i, 0)));
        d[i] = uniform(rng) < e ? 1.0 : 0.0;
        mu0[i] = std::sin(z(i, 0)) + 0.5 * z(i, p - 1);
        mu1[i] = mu0[i] + 1.0 + 0.3 * z(i, 0) * z(i, 0);
        y[i] = (d[i] > 0.5 ? mu1[i] : mu0[i]) + 0.2 * normal(rng);
    }
    d[0] = 1.0;
    d[1] = 0.0;
    y[0] = mu1[0];
    y[1] = mu0[1];
    std::optional<Oracle> oracle;
    if (with_oracle) oracle = Oracle{mu0, mu1, std::nullopt};
    return Dataset(d, z, y, oracle);
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double sd = 1.0) {
    std::normal_distribution<double> normal(0.0, sd);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
}

/// Feature map whose basis is the constant 1 (intercept only).
inline FeatureMap intercept_only_map(Eigen::Index p) {
    return FeatureMap(Eigen::MatrixXd(0, p), Eigen::VectorXd(0), 1.0, true);
}

inline Eigen::MatrixXd column(std::initializer_list<double> xs) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(xs.size()), 1);
    Eigen::Index i = 0;
    for (double x : xs) m(i++, 0) = x;
    return m;
}

inline Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("regbal_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace regbal::testing
