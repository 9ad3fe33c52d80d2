#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mds/error.hpp"

namespace mds {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw ShapeMismatch("Matrix: data size does not match rows*cols");
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    /// Column c as a contiguous vector.
    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(rows_);
        for (std::size_t r = 0; r < rows_; ++r) {
            out[r] = (*this)(r, c);
        }
        return out;
    }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// T x D feature frames at frame rate fs, belonging to one speaker.
struct FeatureSequence {
    Matrix frames;
    double fs = 0.0;
    std::string speaker_id;

    std::size_t length() const noexcept { return frames.rows(); }
    std::size_t dims() const noexcept { return frames.cols(); }

    void validate() const {
        if (frames.rows() < 1 || frames.cols() < 1) {
            throw InvalidArgument("FeatureSequence: needs at least one frame and one dimension");
        }
        if (!(fs > 0.0) || !std::isfinite(fs)) {
            throw InvalidArgument("FeatureSequence: frame rate must be positive");
        }
        for (double v : frames.data()) {
            if (!std::isfinite(v)) {
                throw InvalidArgument("FeatureSequence: non-finite entry");
            }
        }
    }
};

}  // namespace mds
