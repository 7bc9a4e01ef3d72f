#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mlmn/errors.hpp"

namespace mlmn {

    using Shape = std::vector<std::size_t>;

    inline std::size_t shape_size(const Shape& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    }

    inline std::string shape_string(const Shape& shape) {
        std::ostringstream os;
        os << '[';
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) os << 'x';
            os << shape[i];
        }
        os << ']';
        return os.str();
    }

    // Dense row-major array of doubles.
    class Tensor {
    public:
        Tensor() = default;

        explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
            validate_shape();
            data_.assign(shape_size(shape_), fill);
        }

        Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
            validate_shape();
            if (data_.size() != shape_size(shape_)) {
                throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_string(shape_));
            }
        }

        static Tensor vector(std::vector<double> values) {
            const std::size_t n = values.size();
            return Tensor({n}, std::move(values));
        }

        static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
            return Tensor({rows, cols}, std::move(values));
        }

        static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
            const std::size_t r = rows.size();
            const std::size_t c = r ? rows.begin()->size() : 0;
            std::vector<double> values;
            values.reserve(r * c);
            for (const auto& row : rows) {
                if (row.size() != c) throw ShapeError("ragged matrix literal");
                values.insert(values.end(), row.begin(), row.end());
            }
            return Tensor({r, c}, std::move(values));
        }

        static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }

        const Shape& shape() const { return shape_; }
        std::size_t rank() const { return shape_.size(); }
        std::size_t dim(std::size_t i) const { return shape_.at(i); }
        std::size_t size() const { return data_.size(); }
        bool empty() const { return data_.empty(); }

        // rows/cols view a tensor as a matrix over its last dimension
        std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }
        std::size_t rows() const { return cols() ? data_.size() / cols() : 0; }

        double& operator[](std::size_t i) { return data_[i]; }
        double operator[](std::size_t i) const { return data_[i]; }

        double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
        double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

        std::span<double> data() { return data_; }
        std::span<const double> data() const { return data_; }
        const std::vector<double>& values() const { return data_; }

        std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }
        std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }

        void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

        bool all_finite() const {
            for (double v : data_) {
                if (!std::isfinite(v)) return false;
            }
            return true;
        }

        bool operator==(const Tensor& other) const = default;

    private:
        void validate_shape() const {
            for (std::size_t d : shape_) {
                if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape_));
            }
        }

        Shape shape_;
        std::vector<double> data_;
    };

    inline void require_finite(const Tensor& t, const std::string& what) {
        if (!t.all_finite()) throw NumericError("non-finite value in " + what);
    }

}  // namespace mlmn
