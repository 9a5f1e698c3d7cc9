#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace iar {

// Every error raised by the library derives from Error. The CLI maps Error to
// exit code 1 (bad input) and anything else to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParameterError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class RangeError : public Error { using Error::Error; };
class DegenerateError : public Error { using Error::Error; };
class ConsistencyError : public Error { using Error::Error; };
class AlignmentError : public Error { using Error::Error; };
class ModeError : public Error { using Error::Error; };

// A ratio or mean that has no value (e.g. precision over zero peaks). Never 0.
using Maybe = std::optional<double>;

enum class Domain { math, code, logic, commonsense };

std::string_view to_string(Domain d);
Domain domain_from_string(std::string_view s);
inline constexpr Domain kAllDomains[] = {Domain::math, Domain::code, Domain::logic,
                                         Domain::commonsense};

// Sorted, duplicate-free token positions.
using IndexSet = std::vector<std::size_t>;

std::size_t intersection_size(const IndexSet& a, const IndexSet& b);

// Read-only view over a dense row-major matrix.
template <typename T>
class MatrixView {
public:
    MatrixView() = default;
    MatrixView(std::span<const T> data, std::size_t rows, std::size_t cols)
        : data_(data), rows_(rows), cols_(cols) {
        if (data.size() != rows * cols) {
            throw ShapeError("matrix view: buffer size does not match rows*cols");
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::span<const T> row(std::size_t i) const { return data_.subspan(i * cols_, cols_); }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    std::span<const T> data() const noexcept { return data_; }

private:
    std::span<const T> data_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
};

// Dense row-major matrix of doubles, owning storage.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(values).subspan(i * cols, cols);
    }
    std::span<double> row(std::size_t i) { return std::span<double>(values).subspan(i * cols, cols); }
    MatrixView<double> view() const { return {values, rows, cols}; }
};

}  // namespace iar
