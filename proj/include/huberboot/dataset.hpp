#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace huberboot {

// A regression sample: n rows of d covariates plus n responses.
struct Dataset {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;

    Eigen::Index n() const { return x.rows(); }
    Eigen::Index d() const { return x.cols(); }

    // Shape and finiteness checks shared by every entry point that takes a
    // dataset. Throws std::invalid_argument; file loading wraps its own
    // richer parse errors before this runs.
    void validate() const {
        if (x.rows() == 0 || x.cols() == 0)
            throw std::invalid_argument("dataset: empty design matrix");
        if (y.size() != x.rows())
            throw std::invalid_argument(
                "dataset: response length " + std::to_string(y.size()) +
                " does not match design rows " + std::to_string(x.rows()));
        if (!x.allFinite() || !y.allFinite())
            throw std::invalid_argument("dataset: non-finite entries");
    }
};

// Returns a copy with a leading column of ones.
inline Dataset with_intercept(const Dataset& data) {
    Dataset out;
    out.x.resize(data.x.rows(), data.x.cols() + 1);
    out.x.col(0).setOnes();
    out.x.rightCols(data.x.cols()) = data.x;
    out.y = data.y;
    return out;
}

}  // namespace huberboot
