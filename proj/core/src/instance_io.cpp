#include "odr_dro/instance_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "odr_dro/errors.hpp"

namespace odr {

namespace {

using nlohmann::json;

json vec_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json mat_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Vector json_vec(const json& j) {
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

Matrix json_mat(const json& j, Eigen::Index cols) {
  Matrix m(j.size(), cols);
  for (size_t i = 0; i < j.size(); ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw InputError("instance json: ragged matrix");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

}  // namespace

std::string instance_to_json(const DroInstance& in) {
  json j;
  j["format"] = "odr-dro-instance";
  j["version"] = 1;
  j["label"] = in.label;
  j["dims"] = {{"m", in.m()},
               {"n", in.n()},
               {"k", in.k()},
               {"l", in.support.rows()},
               {"tau", in.decisions.tau()}};
  j["mu"] = vec_json(in.ambiguity.mu);
  j["sigma"] = mat_json(in.ambiguity.sigma);
  j["gamma1"] = in.ambiguity.gamma1;
  j["gamma2"] = in.ambiguity.gamma2;
  j["support"] = {{"a", mat_json(in.support.a)}, {"b", vec_json(in.support.b)}};
  json pieces = json::array();
  for (const auto& pc : in.objective.pieces) {
    pieces.push_back({{"w", mat_json(pc.w)},
                      {"d", vec_json(pc.d)},
                      {"w0", vec_json(pc.w0)},
                      {"d0", pc.d0}});
  }
  j["pieces"] = std::move(pieces);
  json lmi = json::array();
  for (const auto& d : in.decisions.lmi) lmi.push_back(mat_json(d));
  j["decisions"] = {{"lmi", std::move(lmi)},
                    {"eq_a", mat_json(in.decisions.eq_a)},
                    {"eq_b", vec_json(in.decisions.eq_b)}};
  return j.dump(1) + "\n";
}

DroInstance instance_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("instance json: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "odr-dro-instance" || j.at("version").get<int>() != 1) {
      throw InputError("instance json: unsupported format or version");
    }
    const auto& dims = j.at("dims");
    const int m = dims.at("m").get<int>();
    const int n = dims.at("n").get<int>();
    const int tau = dims.at("tau").get<int>();
    DroInstance in;
    in.label = j.at("label").get<std::string>();
    in.ambiguity.mu = json_vec(j.at("mu"));
    in.ambiguity.sigma = json_mat(j.at("sigma"), m);
    in.ambiguity.gamma1 = j.at("gamma1").get<double>();
    in.ambiguity.gamma2 = j.at("gamma2").get<double>();
    in.support.a = json_mat(j.at("support").at("a"), m);
    in.support.b = json_vec(j.at("support").at("b"));
    for (const auto& pj : j.at("pieces")) {
      AffinePiece pc;
      pc.w = json_mat(pj.at("w"), n);
      pc.d = json_vec(pj.at("d"));
      pc.w0 = json_vec(pj.at("w0"));
      pc.d0 = pj.at("d0").get<double>();
      in.objective.pieces.push_back(std::move(pc));
    }
    const auto& dj = j.at("decisions");
    for (const auto& lj : dj.at("lmi")) in.decisions.lmi.push_back(json_mat(lj, tau));
    in.decisions.eq_a = json_mat(dj.at("eq_a"), n);
    in.decisions.eq_b = json_vec(dj.at("eq_b"));
    return in;
  } catch (const json::exception& e) {
    throw InputError(std::string("instance json: ") + e.what());
  }
}

void save_instance(const DroInstance& instance, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open for writing: " + path);
  out << instance_to_json(instance);
}

DroInstance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return instance_from_json(buf.str());
}

}  // namespace odr
