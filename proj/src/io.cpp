#include "srn/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace srn {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items())
    if (!known.contains(key))
      throw std::invalid_argument("unknown key \"" + key + "\" in " + where);
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw std::invalid_argument("missing key \"" + key + "\" in " + where);
  return *it;
}

}  // namespace

ReactionNetwork parse_network_json(const std::string& text) {
  const json doc = json::parse(text);
  if (!doc.is_object()) throw std::invalid_argument("network document must be an object");
  reject_unknown_keys(doc, {"species", "omega", "reactions"}, "network document");

  const json& jspecies = require(doc, "species", "network document");
  std::vector<std::string> species = jspecies.get<std::vector<std::string>>();
  std::map<std::string, int> species_index;
  for (int j = 0; j < static_cast<int>(species.size()); ++j) {
    if (species_index.contains(species[j]))
      throw std::invalid_argument("duplicate species name: " + species[j]);
    species_index[species[j]] = j;
  }
  const int J = static_cast<int>(species.size());

  double omega = 1.0;
  if (doc.contains("omega")) omega = doc.at("omega").get<double>();

  std::vector<std::string> param_names;
  std::map<std::string, int> param_index;
  auto coeffs = [&](const json& side, const std::string& where) {
    Eigen::VectorXi v = Eigen::VectorXi::Zero(J);
    for (const auto& [name, coeff] : side.items()) {
      auto it = species_index.find(name);
      if (it == species_index.end())
        throw std::invalid_argument("unknown species \"" + name + "\" in " + where);
      const int c = coeff.get<int>();
      if (c < 0) throw std::invalid_argument("negative coefficient in " + where);
      v(it->second) = c;
    }
    return v;
  };

  std::vector<Reaction> reactions;
  const json& jreactions = require(doc, "reactions", "network document");
  for (const json& jr : jreactions) {
    reject_unknown_keys(jr, {"reactants", "products", "param"}, "reaction");
    Reaction r;
    r.reactants = coeffs(require(jr, "reactants", "reaction"), "reactants");
    r.products = coeffs(require(jr, "products", "reaction"), "products");
    const std::string pname = require(jr, "param", "reaction").get<std::string>();
    auto [it, inserted] = param_index.try_emplace(pname, static_cast<int>(param_names.size()));
    if (inserted) param_names.push_back(pname);
    r.rate_param = it->second;
    reactions.push_back(std::move(r));
  }

  return ReactionNetwork(std::move(reactions), J, omega, std::move(species),
                         std::move(param_names));
}

ReactionNetwork load_network_json(const std::string& path) {
  try {
    return parse_network_json(read_text_file(path));
  } catch (const std::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

std::string dataset_to_json_text(const Dataset& ds) {
  json doc;
  doc["times"] = std::vector<double>(ds.model.times.begin(), ds.model.times.end());
  json observed = json::array();
  for (const auto& set : ds.model.observed) {
    json one = json::array();
    for (int j : set) one.push_back(j + 1);  // 1-based in the file
    observed.push_back(one);
  }
  doc["observed"] = observed;
  doc["batch"] = ds.model.batch;
  json sigma = json::object();
  for (const auto& [j, var] : ds.model.noise_variances)
    sigma[std::to_string(j + 1)] = var;
  doc["sigma"] = sigma;
  json y = json::array();
  for (const auto& yh : ds.y) y.push_back(std::vector<double>(yh.begin(), yh.end()));
  doc["y"] = y;
  if (ds.provenance.present) {
    json prov;
    prov["seed"] = ds.provenance.seed;
    prov["theta"] = std::vector<double>(ds.provenance.theta.begin(),
                                        ds.provenance.theta.end());
    prov["config_hash"] = ds.provenance.config_hash;
    doc["provenance"] = prov;
  }
  return doc.dump(2) + "\n";
}

Dataset parse_dataset_json(const std::string& text) {
  const json doc = json::parse(text);
  if (!doc.is_object()) throw std::invalid_argument("dataset document must be an object");
  reject_unknown_keys(doc, {"times", "observed", "batch", "sigma", "y", "provenance"},
                      "dataset document");

  Dataset ds;
  const std::vector<double> times =
      require(doc, "times", "dataset").get<std::vector<double>>();
  ds.model.times = Eigen::Map<const Eigen::VectorXd>(times.data(),
                                                     static_cast<Eigen::Index>(times.size()));
  for (const json& one : require(doc, "observed", "dataset")) {
    std::vector<int> set;
    for (const json& j : one) {
      const int idx = j.get<int>();
      if (idx < 1) throw std::invalid_argument("species indices are 1-based");
      set.push_back(idx - 1);
    }
    ds.model.observed.push_back(std::move(set));
  }
  ds.model.batch = require(doc, "batch", "dataset").get<int>();
  for (const auto& [key, var] : require(doc, "sigma", "dataset").items()) {
    const int idx = std::stoi(key);
    if (idx < 1) throw std::invalid_argument("species indices are 1-based");
    ds.model.noise_variances[idx - 1] = var.get<double>();
  }
  for (const json& jy : require(doc, "y", "dataset")) {
    const std::vector<double> row = jy.get<std::vector<double>>();
    ds.y.push_back(Eigen::Map<const Eigen::VectorXd>(row.data(),
                                                     static_cast<Eigen::Index>(row.size())));
  }
  if (doc.contains("provenance")) {
    const json& prov = doc.at("provenance");
    reject_unknown_keys(prov, {"seed", "theta", "config_hash"}, "provenance");
    ds.provenance.present = true;
    ds.provenance.seed = require(prov, "seed", "provenance").get<std::uint64_t>();
    const std::vector<double> th =
        require(prov, "theta", "provenance").get<std::vector<double>>();
    ds.provenance.theta = Eigen::Map<const Eigen::VectorXd>(
        th.data(), static_cast<Eigen::Index>(th.size()));
    ds.provenance.config_hash = require(prov, "config_hash", "provenance").get<std::string>();
  }

  if (ds.model.observed.size() != static_cast<std::size_t>(ds.model.times.size()))
    throw std::invalid_argument("observed-species list count does not match times");
  ds.validate();
  return ds;
}

void save_dataset_json(const Dataset& ds, const std::string& path) {
  write_text_file(path, dataset_to_json_text(ds));
}

Dataset load_dataset_json(const std::string& path) {
  try {
    return parse_dataset_json(read_text_file(path));
  } catch (const std::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path,
                          const std::string& header_comment) {
  std::ostringstream out;
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  const auto J = traj.initial_state.size();
  out << "time";
  for (Eigen::Index j = 0; j < J; ++j) out << ",x" << (j + 1);
  out << "\n";
  auto row = [&](double t, const CountVector& x) {
    out << format_double(t);
    for (Eigen::Index j = 0; j < J; ++j) out << "," << x(j);
    out << "\n";
  };
  row(0.0, traj.initial_state);
  for (std::size_t i = 0; i < traj.jump_times.size(); ++i)
    row(traj.jump_times[i], traj.states[i]);
  write_text_file(path, out.str());
}

}  // namespace srn
