#include "dualoop/numerics/tensor.hpp"

#include <sstream>

namespace dualoop {

std::string shape_string(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

Matrix& ParamStore::add(std::string name, Matrix value) {
  if (index_.contains(name)) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(value)});
  return entries_.back().value;
}

bool ParamStore::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

Matrix& ParamStore::at(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw std::out_of_range("unknown parameter: " + std::string(name));
  }
  return entries_[it->second].value;
}

const Matrix& ParamStore::at(std::string_view name) const {
  return const_cast<ParamStore*>(this)->at(name);
}

std::size_t ParamStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
  return n;
}

bool ParamStore::same_layout(const ParamStore& other) const {
  if (size() != other.size()) return false;
  for (const auto& e : entries_) {
    auto it = other.index_.find(e.name);
    if (it == other.index_.end()) return false;
    const Matrix& o = other.entries_[it->second].value;
    if (o.rows() != e.value.rows() || o.cols() != e.value.cols()) return false;
  }
  return true;
}

void ParamStore::require_same_layout(const ParamStore& other, std::string_view what) const {
  if (size() != other.size()) {
    throw DimensionError(std::string(what) + ": entry count " + std::to_string(size()) + " vs " +
                         std::to_string(other.size()));
  }
  for (const auto& e : entries_) {
    auto it = other.index_.find(e.name);
    if (it == other.index_.end()) {
      throw DimensionError(std::string(what) + ": '" + e.name + "' missing from second operand");
    }
    const Matrix& o = other.entries_[it->second].value;
    if (o.rows() != e.value.rows() || o.cols() != e.value.cols()) {
      throw DimensionError(std::string(what) + ": '" + e.name + "' is " + shape_string(e.value) +
                           " vs " + shape_string(o));
    }
  }
}

ParamStore ParamStore::zeros_like() const {
  ParamStore out;
  for (const auto& e : entries_) out.add(e.name, Matrix::Zero(e.value.rows(), e.value.cols()));
  return out;
}

void ParamStore::set_zero() {
  for (auto& e : entries_) e.value.setZero();
}

void ParamStore::add_scaled(const ParamStore& other, double scale) {
  require_same_layout(other, "add_scaled");
  for (auto& e : entries_) e.value += scale * other.at(e.name);
}

void ParamStore::scale(double factor) {
  for (auto& e : entries_) e.value *= factor;
}

double ParamStore::squared_norm() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value.squaredNorm();
  return s;
}

bool ParamStore::all_finite() const {
  for (const auto& e : entries_) {
    if (!e.value.allFinite()) return false;
  }
  return true;
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    const auto& x = a.entries_[i];
    const auto& y = b.entries_[i];
    if (x.name != y.name || x.value.rows() != y.value.rows() || x.value.cols() != y.value.cols()) {
      return false;
    }
    if (x.value != y.value) return false;
  }
  return true;
}

}  // namespace dualoop
