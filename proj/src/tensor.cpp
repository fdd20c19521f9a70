#include "edgerec/tensor.hpp"

#include <cstdlib>

namespace edgerec {

std::string vec_to_text(const Vec& v) {
  std::string out;
  out.reserve(v.size() * 20);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(' ');
    out += format_g17(v[i]);
  }
  return out;
}

Vec vec_from_text(const std::string& s) {
  Vec v;
  const char* p = s.c_str();
  char* end = nullptr;
  while (*p) {
    double x = std::strtod(p, &end);
    if (end == p) break;
    v.push_back(x);
    p = end;
  }
  return v;
}

nlohmann::json tensor_to_json(const std::string& name, const Tensor& t) {
  nlohmann::json j;
  if (!name.empty()) j["name"] = name;
  j["shape"] = t.shape;
  j["data"] = vec_to_text(t.data);
  return j;
}

Tensor tensor_from_json(const nlohmann::json& j, std::string* name_out) {
  Tensor t;
  t.shape = j.at("shape").get<std::vector<std::size_t>>();
  t.data = vec_from_text(j.at("data").get<std::string>());
  std::size_t n = 1;
  for (auto d : t.shape) n *= d;
  EDGEREC_CHECK(t.data.size() == n, "tensor data length does not match shape");
  if (name_out) *name_out = j.value("name", "");
  return t;
}

}  // namespace edgerec
