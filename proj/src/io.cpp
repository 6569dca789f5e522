#include "gsm/io.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

namespace gsm::io {
namespace {

using nlohmann::json;

constexpr const char* kDbFormat = "gsm-db/1";
constexpr const char* kEntryFormat = "gsm-entry/1";
constexpr const char* kFamilyFormat = "gsm-family/1";
constexpr const char* kPodFormat = "gsm-pod/1";
constexpr const char* kGsmFormat = "gsm-model/1";

[[noreturn]] void malformed(const std::string& path, const std::string& why) {
  throw ConfigError("artifact " + path + ": " + why);
}

void check_format(const json& doc, const char* expected,
                  const std::string& path) {
  if (!doc.contains("format") || doc["format"] != expected)
    malformed(path, std::string("expected format ") + expected);
}

json params_to_json(const FamilyParams& p) {
  return json{{"slope", to_json(p.slope)},
              {"intercept", p.intercept},
              {"ridge_amplitude", p.ridge_amplitude},
              {"ridge_location", p.ridge_location},
              {"ridge_width", p.ridge_width},
              {"bump_center", to_json(p.bump_center)},
              {"bump_radius", p.bump_radius},
              {"bump_height", p.bump_height}};
}

FamilyParams params_from_json(const json& j) {
  FamilyParams p;
  p.slope = vector_from(j.at("slope"));
  p.intercept = j.at("intercept").get<double>();
  p.ridge_amplitude = j.at("ridge_amplitude").get<double>();
  p.ridge_location = j.at("ridge_location").get<double>();
  p.ridge_width = j.at("ridge_width").get<double>();
  p.bump_center = vector_from(j.at("bump_center"));
  p.bump_radius = j.at("bump_radius").get<double>();
  p.bump_height = j.at("bump_height").get<double>();
  return p;
}

std::string entry_file(int j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "entry_%03d.json", j);
  return buf;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::string content_hash(json doc) {
  doc.erase("hash");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(doc.dump())));
  return buf;
}

std::string write_artifact(const std::string& path, json doc) {
  doc["hash"] = content_hash(doc);
  std::ofstream out(path);
  if (!out.is_open()) throw ConfigError("cannot write " + path);
  out << doc.dump(2) << '\n';
  if (!out.good()) throw ConfigError("write failed for " + path);
  return doc["hash"].get<std::string>();
}

json read_artifact(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw ConfigError("cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    malformed(path, e.what());
  }
  if (!doc.is_object() || !doc.contains("hash") ||
      !doc["hash"].is_string())
    malformed(path, "missing content hash");
  if (doc["hash"].get<std::string>() != content_hash(doc))
    throw StaleArtifact("artifact " + path +
                        " does not match its recorded content hash");
  return doc;
}

json to_json(const VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_json(const MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

VectorXd vector_from(const json& a) {
  if (!a.is_array()) throw ConfigError("expected a numeric array");
  VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
  return v;
}

MatrixXd matrix_from(const json& a) {
  if (!a.is_array()) throw ConfigError("expected an array of rows");
  const int rows = static_cast<int>(a.size());
  if (rows == 0) return MatrixXd(0, 0);
  const int cols = static_cast<int>(a[0].size());
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(a[i].size()) != cols)
      throw ConfigError("ragged matrix rows");
    for (int j = 0; j < cols; ++j) m(i, j) = a[i][j].get<double>();
  }
  return m;
}

AlignedDatabase DatabaseDir::database() const {
  AlignedDatabase db{synthetic.entries, transforms, synthetic.domain,
                     synthetic.domain.inflated(kDomainExtension)};
  db.validate();
  return db;
}

void write_database(const std::string& dir, const SyntheticDatabase& db,
                    std::uint64_t seed) {
  const int m = static_cast<int>(db.entries.size());
  if (m < 2) throw ConfigError("a database needs at least 2 members");
  std::filesystem::create_directories(dir);

  json entries = json::array();
  bool distorted = false;
  for (int j = 0; j < m; ++j) {
    const json doc{{"format", kEntryFormat},
                   {"params", params_to_json(db.params[j])},
                   {"distortion", to_json(db.distortions[j].pack())}};
    const std::string name = entry_file(j);
    const std::string hash = write_artifact(dir + "/" + name, doc);
    entries.push_back(json{{"file", name}, {"hash", hash}});
    distorted = distorted || !db.distortions[j].is_identity();
  }

  json transforms = json::array();
  for (int j = 0; j < m; ++j)
    transforms.push_back(to_json(TransformQ::identity(db.domain.dim()).pack()));
  write_artifact(dir + "/manifest.json",
                 json{{"format", kDbFormat},
                      {"domain",
                       json{{"lower", to_json(db.domain.lower)},
                            {"upper", to_json(db.domain.upper)}}},
                      {"m", m},
                      {"entries", std::move(entries)},
                      {"transforms", std::move(transforms)},
                      {"aligned", false}});

  json true_q = json::array();
  for (const TransformQ& q : db.true_q) true_q.push_back(to_json(q.pack()));
  write_artifact(dir + "/family.json", json{{"format", kFamilyFormat},
                                            {"seed", seed},
                                            {"m", m},
                                            {"distorted", distorted},
                                            {"true_q", std::move(true_q)}});
}

DatabaseDir load_database(const std::string& dir) {
  const std::string manifest_path = dir + "/manifest.json";
  const json manifest = read_artifact(manifest_path);
  check_format(manifest, kDbFormat, manifest_path);

  DatabaseDir out;
  try {
    Domain domain(vector_from(manifest.at("domain").at("lower")),
                  vector_from(manifest.at("domain").at("upper")));
    const int d = domain.dim();
    const int m = manifest.at("m").get<int>();
    const json& entries = manifest.at("entries");
    const json& transforms = manifest.at("transforms");
    if (static_cast<int>(entries.size()) != m ||
        static_cast<int>(transforms.size()) != m)
      malformed(manifest_path, "entry/transform count mismatch");

    out.synthetic.domain = domain;
    out.aligned = manifest.at("aligned").get<bool>();
    out.manifest_hash = manifest.at("hash").get<std::string>();
    for (int j = 0; j < m; ++j) {
      const std::string name = entries[j].at("file").get<std::string>();
      const std::string path = dir + "/" + name;
      const json entry = read_artifact(path);
      check_format(entry, kEntryFormat, path);
      if (entry.at("hash") != entries[j].at("hash"))
        throw StaleArtifact("entry " + path +
                            " does not match the manifest hash");
      const FamilyParams params = params_from_json(entry.at("params"));
      const TransformQ g =
          TransformQ::unpack(vector_from(entry.at("distortion")), d);
      out.synthetic.params.push_back(params);
      out.synthetic.distortions.push_back(g);
      out.synthetic.entries.push_back(make_distorted_member(params, g));
      out.transforms.push_back(
          TransformQ::unpack(vector_from(transforms[j]), d));
    }

    const std::string family_path = dir + "/family.json";
    const json family = read_artifact(family_path);
    check_format(family, kFamilyFormat, family_path);
    out.seed = family.at("seed").get<std::uint64_t>();
    for (const json& q : family.at("true_q"))
      out.synthetic.true_q.push_back(TransformQ::unpack(vector_from(q), d));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    malformed(manifest_path, e.what());
  }
  return out;
}

std::string update_transforms(const std::string& dir,
                              const std::vector<TransformQ>& transforms) {
  const std::string manifest_path = dir + "/manifest.json";
  json manifest = read_artifact(manifest_path);
  check_format(manifest, kDbFormat, manifest_path);
  if (manifest.at("m").get<int>() != static_cast<int>(transforms.size()))
    throw ConfigError("transform count does not match the manifest");
  json packed = json::array();
  for (const TransformQ& q : transforms) packed.push_back(to_json(q.pack()));
  manifest["transforms"] = std::move(packed);
  manifest["aligned"] = true;
  return write_artifact(manifest_path, std::move(manifest));
}

std::string write_pod(const std::string& path, const PodBasis& basis,
                      const std::string& db_hash) {
  return write_artifact(path, nlohmann::json{
                                  {"format", kPodFormat},
                                  {"eigenvalues", to_json(basis.eigenvalues)},
                                  {"modes", to_json(basis.modes)},
                                  {"sigma", to_json(basis.sigma)},
                                  {"rank", basis.rank},
                                  {"threshold", basis.threshold},
                                  {"mean_centered", basis.mean_centered},
                                  {"db_hash", db_hash}});
}

PodBasis load_pod(const std::string& path, const DatabaseDir& db) {
  const json doc = read_artifact(path);
  check_format(doc, kPodFormat, path);
  if (doc.at("db_hash") != db.manifest_hash)
    throw StaleArtifact("pod artifact " + path +
                        " was built from a different database state");
  PodBasis basis;
  try {
    basis.db = db.database();
    basis.eigenvalues = vector_from(doc.at("eigenvalues"));
    basis.modes = matrix_from(doc.at("modes"));
    basis.sigma = vector_from(doc.at("sigma"));
    basis.rank = doc.at("rank").get<int>();
    basis.threshold = doc.at("threshold").get<double>();
    basis.mean_centered = doc.at("mean_centered").get<bool>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    malformed(path, e.what());
  }
  if (basis.modes.rows() != basis.db.size() ||
      basis.modes.cols() != basis.rank ||
      basis.sigma.size() != basis.rank ||
      basis.eigenvalues.size() != basis.db.size())
    malformed(path, "inconsistent basis shapes");
  return basis;
}

std::string write_gsm(const std::string& path,
                      const GenericSurrogateModel& model,
                      const std::string& db_hash,
                      const std::string& pod_hash) {
  return write_artifact(path,
                        nlohmann::json{{"format", kGsmFormat},
                                       {"a_psi", to_json(model.a_psi)},
                                       {"a_y", to_json(model.a_y)},
                                       {"p", to_json(model.p.pack())},
                                       {"residual", model.residual},
                                       {"delta", model.delta},
                                       {"linear_fallback",
                                        model.linear_fallback},
                                       {"db_hash", db_hash},
                                       {"pod_hash", pod_hash}});
}

GenericSurrogateModel load_gsm(const std::string& path, const PodBasis& basis,
                               const std::string& db_hash,
                               const std::string& pod_hash) {
  const json doc = read_artifact(path);
  check_format(doc, kGsmFormat, path);
  if (doc.at("db_hash") != db_hash)
    throw StaleArtifact("gsm artifact " + path +
                        " was built from a different database state");
  if (doc.at("pod_hash") != pod_hash)
    throw StaleArtifact("gsm artifact " + path +
                        " was built from a different basis");
  GenericSurrogateModel model;
  try {
    model.basis = basis;
    model.a_psi = vector_from(doc.at("a_psi"));
    model.a_y = vector_from(doc.at("a_y"));
    model.p = TransformP::unpack(vector_from(doc.at("p")), basis.dim());
    model.residual = doc.at("residual").get<double>();
    model.delta = doc.at("delta").get<double>();
    model.linear_fallback = doc.at("linear_fallback").get<bool>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    malformed(path, e.what());
  }
  if (model.a_psi.size() != basis.rank || model.a_y.size() != basis.db.size())
    malformed(path, "coefficient sizes do not match the basis");
  return model;
}

namespace {

bool parse_field(const std::string& field, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(field, &used);
    while (used < field.size() &&
           std::isspace(static_cast<unsigned char>(field[used])))
      ++used;
    return used == field.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

SampleSet read_samples_csv(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in.is_open()) throw ConfigError("cannot open " + path);
  std::vector<VectorXd> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream split(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(split, field, ',')) fields.push_back(field);
    double first = 0.0;
    if (fields.empty() || !parse_field(fields[0], first)) continue;
    if (static_cast<int>(fields.size()) != dim + 1)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(dim + 1) + " fields, got " +
                        std::to_string(fields.size()));
    VectorXd row(dim + 1);
    row[0] = first;
    for (int k = 1; k <= dim; ++k)
      if (!parse_field(fields[k], row[k]))
        throw ConfigError(path + ":" + std::to_string(lineno) +
                          ": field " + std::to_string(k + 1) +
                          " is not numeric");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError(path + ": no samples");
  SampleSet s;
  s.points.resize(static_cast<int>(rows.size()), dim);
  s.values.resize(static_cast<int>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    s.points.row(static_cast<int>(i)) = rows[i].head(dim).transpose();
    s.values[static_cast<int>(i)] = rows[i][dim];
  }
  return s;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace gsm::io
