#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace zlab {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Typed errors

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Argument outside the implemented range (e.g. n > 3, j > 2).
struct DomainError : Error {
    using Error::Error;
};
// Operation requested on a model where it is structurally undefined
// (e.g. a second-order density on a curve).
struct DegenerateInputError : Error {
    using Error::Error;
};
// Metric lost positive definiteness somewhere.
struct PositivityError : Error {
    using Error::Error;
};
// Gram (or a fit) is too ill-conditioned to trust.
struct ConditioningError : Error {
    using Error::Error;
};
// Field sampled on a different node set than the model's.
struct NodeMismatchError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Compensated (Neumaier) summation.  All node reductions go through this with
// a fixed traversal order, so results do not depend on the worker count.

class KahanSum {
  public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

class KahanSumC {
  public:
    void add(cplx x) {
        re_.add(x.real());
        im_.add(x.imag());
    }
    cplx value() const { return {re_.value(), im_.value()}; }

  private:
    KahanSum re_, im_;
};

inline double compensated_total(const std::vector<double>& xs) {
    KahanSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

inline cplx compensated_total(const std::vector<cplx>& xs) {
    KahanSumC s;
    for (cplx x : xs) s.add(x);
    return s.value();
}

// ---------------------------------------------------------------------------
// Deterministic parallel loop.  Workers only fill disjoint slots; any
// reduction happens afterwards in index order, so the worker count (env
// ZLAB_WORKERS) never changes results.

inline int worker_count() {
    if (const char* env = std::getenv("ZLAB_WORKERS")) {
        int w = std::atoi(env);
        if (w >= 1) return std::min(w, 64);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}

inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    int workers = worker_count();
    if (workers <= 1 || n < 64) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::size_t chunk = (n + static_cast<std::size_t>(workers) - 1) / static_cast<std::size_t>(workers);
    for (int w = 0; w < workers; ++w) {
        std::size_t lo = static_cast<std::size_t>(w) * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Least squares in a scaled basis.  Columns are normalized before solving so
// the reported condition number reflects the actual fit, not the spread of
// raw powers of k.

struct LeastSquaresResult {
    Eigen::VectorXd coeff;
    Eigen::VectorXd stderr_;     // per-coefficient standard error (0 when dof == 0)
    double residual_norm = 0.0;  // ||A c - b||_2
    double cond = 0.0;           // condition number of the scaled design matrix
    int dof = 0;
};

inline LeastSquaresResult least_squares_scaled(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    const Eigen::Index m = A.rows(), n = A.cols();
    if (n == 0) throw DomainError("least_squares_scaled: empty basis");
    if (m < n) throw DomainError("least_squares_scaled: underdetermined system");

    Eigen::VectorXd scale(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double s = A.col(j).norm();
        if (s == 0.0) throw ConditioningError("least_squares_scaled: zero column");
        scale[j] = s;
    }
    Eigen::MatrixXd As = A * scale.cwiseInverse().asDiagonal();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(As, Eigen::ComputeThinU | Eigen::ComputeThinV);
    double smax = svd.singularValues()(0);
    double smin = svd.singularValues()(n - 1);
    if (!(smin > 0.0) || smax / smin > 1e13)
        throw ConditioningError("least_squares_scaled: rank-deficient design matrix");

    Eigen::VectorXd cs = svd.solve(b);

    LeastSquaresResult r;
    r.cond = smax / smin;
    r.coeff = cs.cwiseQuotient(scale);
    r.residual_norm = (A * r.coeff - b).norm();
    r.dof = static_cast<int>(m - n);
    r.stderr_ = Eigen::VectorXd::Zero(n);
    if (r.dof > 0) {
        double sigma2 = r.residual_norm * r.residual_norm / r.dof;
        // diag of (A^T A)^{-1} through the SVD of the scaled matrix
        const auto& V = svd.matrixV();
        for (Eigen::Index j = 0; j < n; ++j) {
            double v = 0.0;
            for (Eigen::Index l = 0; l < n; ++l) {
                double f = V(j, l) / svd.singularValues()(l);
                v += f * f;
            }
            r.stderr_[j] = std::sqrt(sigma2 * v) / scale[j];
        }
    }
    return r;
}

// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline double rel_err(double got, double want) {
    double d = std::abs(got - want);
    double s = std::max(std::abs(want), 1e-300);
    return d / s;
}

} // namespace zlab
