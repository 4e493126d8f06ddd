#include <dsr/instance_io.hpp>

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace dsr {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw StructuralError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw StructuralError(where + ": unknown field '" + key + "'");
  }
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw StructuralError(where + ": missing field '" + key + "'");
  return *it;
}

int as_int(const json& v, const std::string& what) {
  if (!v.is_number_integer()) throw StructuralError(what + " must be an integer");
  return v.get<int>();
}

Rational as_rational(const json& v, const std::string& what) {
  if (v.is_number_integer()) return Rational(v.get<long long>());
  if (v.is_string()) return parse_rational(v.get<std::string>());
  throw StructuralError(what + " must be an integer or a rational string");
}

CostFunction parse_cost(const json& obj, const std::string& where) {
  reject_unknown(obj, {"kind", "coeffs"}, where);
  const json& kind = require(obj, "kind", where);
  const json& coeffs = require(obj, "coeffs", where);
  if (!kind.is_string() || !coeffs.is_array()) throw StructuralError(where + ": malformed cost");
  std::vector<Rational> c;
  for (const json& v : coeffs) c.push_back(as_rational(v, where + " coefficient"));
  const std::string name = kind.get<std::string>();
  if (name == "linear" && c.size() == 1) return CostFunction::linear(c[0]);
  if (name == "quadratic" && c.size() == 2) return CostFunction::quadratic(c[0], c[1]);
  throw StructuralError(where + ": unsupported cost kind '" + name + "' with " +
                        std::to_string(c.size()) + " coefficients");
}

json coeff_json(const Rational& q) {
  if (denominator(q) == 1 && abs(q) < Rational(1LL << 52)) {
    return json(numerator(q).convert_to<long long>());
  }
  return json(q.str());
}

}  // namespace

RepairInstance parse_instance(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw StructuralError(std::string("topology file is not valid JSON: ") + e.what());
  }
  reject_unknown(doc, {"name", "nodes", "links", "failed", "new", "M", "k"}, "topology");

  std::string name;
  if (auto it = doc.find("name"); it != doc.end()) {
    if (!it->is_string()) throw StructuralError("topology: name must be a string");
    name = it->get<std::string>();
  }
  const json& nodes = require(doc, "nodes", "topology");
  const json& links = require(doc, "links", "topology");
  if (!nodes.is_array() || !links.is_array()) {
    throw StructuralError("topology: nodes and links must be arrays");
  }
  std::vector<NodeId> ids;
  for (const json& v : nodes) ids.push_back(as_int(v, "node id"));

  std::vector<Link> parsed_links;
  std::vector<CostFunction> costs;
  for (std::size_t i = 0; i < links.size(); ++i) {
    const std::string where = "links[" + std::to_string(i) + "]";
    reject_unknown(links[i], {"from", "to", "cost"}, where);
    parsed_links.push_back({as_int(require(links[i], "from", where), where + ".from"),
                            as_int(require(links[i], "to", where), where + ".to")});
    costs.push_back(parse_cost(require(links[i], "cost", where), where + ".cost"));
  }

  Topology topology(std::move(ids), std::move(parsed_links), std::move(costs), name);
  return RepairInstance(std::move(topology), as_int(require(doc, "failed", "topology"), "failed"),
                        as_int(require(doc, "new", "topology"), "new"),
                        as_rational(require(doc, "M", "topology"), "M"),
                        as_int(require(doc, "k", "topology"), "k"));
}

RepairInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open topology file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_instance(buffer.str());
}

std::string instance_to_json(const RepairInstance& instance) {
  json doc;
  if (!instance.topology().name().empty()) doc["name"] = instance.topology().name();
  doc["nodes"] = instance.topology().node_ids();
  json links = json::array();
  for (std::size_t i = 0; i < instance.num_links(); ++i) {
    const CostFunction& f = instance.cost(i);
    if (!f.is_exact()) throw StructuralError("custom costs cannot be serialized");
    json coeffs = json::array();
    for (const Rational& c : f.coeffs()) coeffs.push_back(coeff_json(c));
    links.push_back({{"from", instance.links()[i].from},
                     {"to", instance.links()[i].to},
                     {"cost", {{"kind", f.label()}, {"coeffs", coeffs}}}});
  }
  doc["links"] = links;
  doc["failed"] = instance.failed();
  doc["new"] = instance.new_node();
  doc["M"] = coeff_json(instance.file_size());
  doc["k"] = instance.k();
  return doc.dump(2);
}

}  // namespace dsr
