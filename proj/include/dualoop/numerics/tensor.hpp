#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dualoop {

/// Dense row-major matrix of 64-bit reals. Rank-1 parameters are stored as
/// single-column matrices.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string shape_string(const Matrix& m);

/// Named collection of dense arrays. Iteration follows insertion order.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Matrix value;
  };

  ParamStore() = default;

  /// Throws std::invalid_argument if `name` is already present.
  Matrix& add(std::string name, Matrix value);

  [[nodiscard]] bool contains(std::string_view name) const;
  Matrix& at(std::string_view name);
  [[nodiscard]] const Matrix& at(std::string_view name) const;

  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] bool empty() const { return entries_.empty(); }
  [[nodiscard]] std::size_t num_scalars() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  [[nodiscard]] auto begin() const { return entries_.begin(); }
  [[nodiscard]] auto end() const { return entries_.end(); }

  [[nodiscard]] const Entry& entry(std::size_t i) const { return entries_[i]; }
  Entry& entry(std::size_t i) { return entries_[i]; }

  /// Same names (in any order) with the same shapes.
  [[nodiscard]] bool same_layout(const ParamStore& other) const;
  /// Throws DimensionError describing the first difference.
  void require_same_layout(const ParamStore& other, std::string_view what) const;

  [[nodiscard]] ParamStore zeros_like() const;
  void set_zero();

  /// this += scale * other (matched by name).
  void add_scaled(const ParamStore& other, double scale);
  void scale(double factor);

  [[nodiscard]] double squared_norm() const;
  [[nodiscard]] bool all_finite() const;

  /// Exact equality of names, insertion order, shapes and values.
  friend bool operator==(const ParamStore& a, const ParamStore& b);

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace dualoop
