#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <vector>

namespace regmvst {

/// Exact scalar accumulator (Shewchuk expansion arithmetic).
///
/// The running sum is kept as a list of non-overlapping doubles whose exact
/// sum equals the exact sum of everything added so far, so the rounded total
/// does not depend on the order in which terms arrive.  Used wherever serial
/// and partitioned reductions must agree (log-likelihood sums, grid vectors,
/// scalar sufficient statistics).
class ExactSum {
public:
    void add(double x) {
        if (!std::isfinite(x)) {
            has_nonfinite_ = true;
            nonfinite_ += x;
            return;
        }
        std::size_t out = 0;
        for (std::size_t i = 0; i < parts_.size(); ++i) {
            double y = parts_[i];
            if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) parts_[out++] = lo;
            x = hi;
        }
        parts_.resize(out);
        parts_.push_back(x);
    }

    double value() const {
        long double s = 0.0L;
        for (double p : parts_) s += p;
        if (has_nonfinite_) s += nonfinite_;
        return static_cast<double>(s);
    }

    void reset() {
        parts_.clear();
        has_nonfinite_ = false;
        nonfinite_ = 0.0;
    }

private:
    std::vector<double> parts_;
    bool has_nonfinite_ = false;
    double nonfinite_ = 0.0;
};

/// Neumaier-compensated scalar sum; cheaper than ExactSum, order-stable to
/// well below 1e-12 relative for the magnitudes seen here.
class CompensatedSum {
public:
    void add(double x) {
        if (!std::isfinite(x) || !std::isfinite(sum_)) {
            sum_ += x;
            comp_ = 0.0;
            return;
        }
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
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

/// Entrywise Neumaier accumulator for matrix-valued sufficient statistics.
class CompensatedMatrixSum {
public:
    CompensatedMatrixSum() = default;
    CompensatedMatrixSum(Eigen::Index rows, Eigen::Index cols)
        : sum_(Eigen::MatrixXd::Zero(rows, cols)), comp_(Eigen::MatrixXd::Zero(rows, cols)) {}

    void add(const Eigen::MatrixXd& x) {
        if (sum_.size() == 0) {
            sum_ = Eigen::MatrixXd::Zero(x.rows(), x.cols());
            comp_ = Eigen::MatrixXd::Zero(x.rows(), x.cols());
        }
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                const double xi = x(i, j);
                double& s = sum_(i, j);
                const double t = s + xi;
                if (std::fabs(s) >= std::fabs(xi))
                    comp_(i, j) += (s - t) + xi;
                else
                    comp_(i, j) += (xi - t) + s;
                s = t;
            }
        }
    }

    Eigen::MatrixXd value() const {
        if (sum_.size() == 0) return Eigen::MatrixXd();
        return sum_ + comp_;
    }

private:
    Eigen::MatrixXd sum_, comp_;
};

}  // namespace regmvst
