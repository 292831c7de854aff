#include "lmpsh/serialize.hpp"

#include <cmath>

#include <json.hpp>

#include "lmpsh/errors.hpp"

namespace lmpsh {

namespace {

using nlohmann::json;

json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

double number_of(const json& j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector_json(m.row(i).transpose()));
  return a;
}

Eigen::VectorXd vector_of(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number_of(j[i]);
  return v;
}

Eigen::MatrixXd matrix_of(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols) throw DataError("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = number_of(j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]);
  }
  return m;
}

json psh_json(const PSHFit& fit) {
  json j;
  j["type"] = "psh";
  j["variant"] = fit.variant;
  j["covariates"] = fit.covariate_names;
  j["beta"] = vector_json(fit.beta);
  j["landmark"] = fit.landmark ? number(*fit.landmark) : json(nullptr);
  j["window"] = fit.window ? number(*fit.window) : json(nullptr);
  json baselines = json::array();
  for (const auto& b : fit.baselines) {
    json jb;
    jb["times"] = json(std::vector<double>(b.times().begin(), b.times().end()));
    jb["values"] = json(std::vector<double>(b.values().begin(), b.values().end()));
    baselines.push_back(jb);
  }
  j["baselines"] = baselines;
  j["cov_model"] = matrix_json(fit.cov_model);
  j["cov_robust"] = matrix_json(fit.cov_robust);
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["loglik"] = number(fit.loglik);
  j["loglik_null"] = number(fit.loglik_null);
  j["num_rows"] = fit.num_rows;
  j["num_events"] = fit.num_events;
  j["num_clusters"] = fit.num_clusters;
  j["truncated"] = fit.truncated;
  return j;
}

PSHFit psh_of(const json& j) {
  PSHFit fit;
  fit.variant = j.at("variant").get<std::string>();
  fit.covariate_names = j.at("covariates").get<std::vector<std::string>>();
  fit.beta = vector_of(j.at("beta"));
  if (static_cast<std::size_t>(fit.beta.size()) != fit.covariate_names.size()) {
    throw DataError("model file: beta and covariate names differ in length");
  }
  if (!j.at("landmark").is_null()) fit.landmark = number_of(j["landmark"]);
  if (!j.at("window").is_null()) fit.window = number_of(j["window"]);
  for (const auto& jb : j.at("baselines")) {
    fit.baselines.emplace_back(0.0, jb.at("times").get<std::vector<double>>(), jb.at("values").get<std::vector<double>>());
  }
  fit.cov_model = matrix_of(j.at("cov_model"));
  fit.cov_robust = matrix_of(j.at("cov_robust"));
  fit.iterations = j.at("iterations").get<int>();
  fit.converged = j.at("converged").get<bool>();
  fit.loglik = number_of(j.at("loglik"));
  fit.loglik_null = number_of(j.at("loglik_null"));
  fit.num_rows = j.at("num_rows").get<std::size_t>();
  fit.num_events = j.at("num_events").get<std::size_t>();
  fit.num_clusters = j.at("num_clusters").get<std::size_t>();
  fit.truncated = j.at("truncated").get<std::size_t>();
  return fit;
}

json terms_json(const std::vector<PolyTerm>& terms) {
  json a = json::array();
  for (const auto& t : terms) a.push_back(t.coef);
  return a;
}

std::vector<PolyTerm> terms_of(const json& j) {
  std::vector<PolyTerm> out;
  for (const auto& t : j) out.push_back({t.get<std::vector<double>>()});
  return out;
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid model file: ") + e.what());
  }
}

template <class F>
auto guarded(F&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid model file: ") + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string("invalid model file: ") + e.what());
  }
}

}  // namespace

std::string to_json(const PSHFit& fit) { return psh_json(fit).dump(2); }

std::string to_json(const SupermodelFit& fit) {
  json j;
  j["type"] = "supermodel";
  j["variant"] = to_string(fit.variant);
  j["stratified"] = fit.stratified;
  j["covariates"] = fit.covariate_names;
  j["basis"] = {{"f", terms_json(fit.basis.f)}, {"g", terms_json(fit.basis.g)}};
  j["grid"] = fit.grid;
  j["w"] = number(fit.w);
  j["theta"] = matrix_json(fit.theta);
  j["eta"] = vector_json(fit.eta);
  j["model"] = psh_json(fit.model);
  return j.dump(2);
}

std::string model_type_of_json(const std::string& text) {
  return guarded([&] { return parse(text).at("type").get<std::string>(); });
}

PSHFit psh_fit_from_json(const std::string& text) {
  return guarded([&] {
    const json j = parse(text);
    if (j.at("type") != "psh") throw DataError("model file is not a PSH fit");
    return psh_of(j);
  });
}

SupermodelFit supermodel_fit_from_json(const std::string& text) {
  return guarded([&] {
    const json j = parse(text);
    if (j.at("type") != "supermodel") throw DataError("model file is not a supermodel fit");
    SupermodelFit fit;
    fit.variant = parse_variant(j.at("variant").get<std::string>());
    fit.stratified = j.at("stratified").get<bool>();
    fit.covariate_names = j.at("covariates").get<std::vector<std::string>>();
    fit.basis.f = terms_of(j.at("basis").at("f"));
    fit.basis.g = terms_of(j.at("basis").at("g"));
    fit.grid = j.at("grid").get<std::vector<double>>();
    fit.w = number_of(j.at("w"));
    fit.theta = matrix_of(j.at("theta"));
    fit.eta = vector_of(j.at("eta"));
    fit.model = psh_of(j.at("model"));
    if (fit.theta.rows() != static_cast<Eigen::Index>(fit.covariate_names.size()) ||
        fit.theta.cols() != static_cast<Eigen::Index>(fit.basis.f.size()) ||
        fit.eta.size() != static_cast<Eigen::Index>(fit.basis.g.size())) {
      throw DataError("model file: coefficient shapes do not match the basis");
    }
    return fit;
  });
}

}  // namespace lmpsh
