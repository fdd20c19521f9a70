#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgerec/common.hpp"

namespace edgerec {

// Dense row-major tensor. Rank 1 or 2 is all the model needs.
struct Tensor {
  std::vector<std::size_t> shape;
  Vec data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, Vec d) : shape(std::move(s)), data(std::move(d)) {}

  static Tensor zeros(std::vector<std::size_t> s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return Tensor(std::move(s), Vec(n, 0.0));
  }

  std::size_t size() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double* row(std::size_t r) { return data.data() + r * cols(); }
  const double* row(std::size_t r) const { return data.data() + r * cols(); }
};

// Serialized as {"name":..., "shape":[...], "data":"v v v ..."} where each
// value is printed with 17 significant digits so the round trip is exact.
nlohmann::json tensor_to_json(const std::string& name, const Tensor& t);
Tensor tensor_from_json(const nlohmann::json& j, std::string* name_out = nullptr);

std::string vec_to_text(const Vec& v);
Vec vec_from_text(const std::string& s);

}  // namespace edgerec
