#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvrff/model.hpp"

namespace mvrff {

namespace {

using json = nlohmann::json;

constexpr const char* kEncodingNote = "base64 little-endian float64 column-major";

const char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(const unsigned char* data, size_t len) {
  std::string out;
  out.reserve((len + 2) / 3 * 4);
  for (size_t i = 0; i < len; i += 3) {
    unsigned v = static_cast<unsigned>(data[i]) << 16;
    if (i + 1 < len) v |= static_cast<unsigned>(data[i + 1]) << 8;
    if (i + 2 < len) v |= static_cast<unsigned>(data[i + 2]);
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back(i + 1 < len ? kB64Alphabet[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < len ? kB64Alphabet[v & 63] : '=');
  }
  return out;
}

std::vector<unsigned char> b64_decode(const std::string& text) {
  int lookup[256];
  std::fill(std::begin(lookup), std::end(lookup), -1);
  for (int i = 0; i < 64; ++i)
    lookup[static_cast<unsigned char>(kB64Alphabet[i])] = i;

  require(text.size() % 4 == 0, "ModelFormat", "base64 payload length not a multiple of 4");
  std::vector<unsigned char> out;
  out.reserve(text.size() / 4 * 3);
  for (size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=') {
        require(i + 4 == text.size() && k >= 2, "ModelFormat", "misplaced base64 padding");
        vals[k] = 0;
        pad++;
      } else {
        vals[k] = lookup[static_cast<unsigned char>(c)];
        require(vals[k] >= 0, "ModelFormat", "invalid base64 character");
        require(pad == 0, "ModelFormat", "data after base64 padding");
      }
    }
    const unsigned v = (static_cast<unsigned>(vals[0]) << 18) |
                       (static_cast<unsigned>(vals[1]) << 12) |
                       (static_cast<unsigned>(vals[2]) << 6) |
                       static_cast<unsigned>(vals[3]);
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    if (pad < 2) out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<unsigned char>(v & 0xff));
  }
  return out;
}

// doubles as raw little-endian bytes
std::string pack_doubles(const double* x, size_t count) {
  std::vector<unsigned char> bytes(count * 8);
  std::memcpy(bytes.data(), x, count * 8);
  if constexpr (std::endian::native == std::endian::big) {
    for (size_t i = 0; i < count; ++i)
      std::reverse(bytes.begin() + static_cast<long>(i * 8),
                   bytes.begin() + static_cast<long>(i * 8 + 8));
  }
  return b64_encode(bytes.data(), bytes.size());
}

std::vector<double> unpack_doubles(const std::string& text, size_t expect) {
  std::vector<unsigned char> bytes = b64_decode(text);
  require(bytes.size() == expect * 8, "ModelFormat", "array payload size mismatch");
  if constexpr (std::endian::native == std::endian::big) {
    for (size_t i = 0; i < expect; ++i)
      std::reverse(bytes.begin() + static_cast<long>(i * 8),
                   bytes.begin() + static_cast<long>(i * 8 + 8));
  }
  std::vector<double> out(expect);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

json encode_matrix(const Matrix& m) {
  return json{{"shape", {m.rows(), m.cols()}},
              {"data", pack_doubles(m.data(), static_cast<size_t>(m.size()))}};
}

json encode_vector(const Vector& v) {
  return json{{"shape", {v.size()}},
              {"data", pack_doubles(v.data(), static_cast<size_t>(v.size()))}};
}

json encode_row_vector(const RowVector& v) {
  return json{{"shape", {v.size()}},
              {"data", pack_doubles(v.data(), static_cast<size_t>(v.size()))}};
}

json encode_std_vector(const std::vector<double>& v) {
  return json{{"shape", {v.size()}}, {"data", pack_doubles(v.data(), v.size())}};
}

Matrix decode_matrix(const json& j) {
  require(j.is_object() && j.contains("shape") && j.contains("data"), "ModelFormat",
          "array entry must carry shape and data");
  const auto& shape = j.at("shape");
  require(shape.is_array() && shape.size() == 2, "ModelFormat",
          "matrix shape must have two dimensions");
  const auto rows = shape[0].get<Eigen::Index>();
  const auto cols = shape[1].get<Eigen::Index>();
  require(rows >= 0 && cols >= 0, "ModelFormat", "negative array dimension");
  std::vector<double> vals = unpack_doubles(j.at("data").get<std::string>(),
                                            static_cast<size_t>(rows * cols));
  Matrix m(rows, cols);
  std::memcpy(m.data(), vals.data(), vals.size() * 8);
  return m;
}

std::vector<double> decode_array1d(const json& j) {
  require(j.is_object() && j.contains("shape") && j.contains("data"), "ModelFormat",
          "array entry must carry shape and data");
  const auto& shape = j.at("shape");
  require(shape.is_array() && shape.size() == 1, "ModelFormat",
          "vector shape must have one dimension");
  const auto n = shape[0].get<long>();
  require(n >= 0, "ModelFormat", "negative array dimension");
  return unpack_doubles(j.at("data").get<std::string>(), static_cast<size_t>(n));
}

Vector decode_vector(const json& j) {
  std::vector<double> vals = decode_array1d(j);
  return Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

RowVector decode_row_vector(const json& j) {
  std::vector<double> vals = decode_array1d(j);
  return Eigen::Map<const RowVector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

json encode_penalty(const PenaltySpec& p) {
  json j;
  j["mode"] = p.mode == PenaltySpec::Mode::Simplex ? "simplex" : "sparse_group";
  j["rho"] = p.rho;
  j["eta"] = p.eta;
  if (p.groups.has_value())
    j["groups"] = p.groups->group_of;
  else
    j["groups"] = nullptr;
  return j;
}

PenaltySpec decode_penalty(const json& j) {
  PenaltySpec p;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "simplex")
    p.mode = PenaltySpec::Mode::Simplex;
  else if (mode == "sparse_group")
    p.mode = PenaltySpec::Mode::SparseGroup;
  else
    throw Error("ModelFormat", "unknown penalty mode '" + mode + "'");
  p.rho = j.at("rho").get<double>();
  p.eta = j.at("eta").get<double>();
  if (!j.at("groups").is_null())
    p.groups = GroupStructure::from_labels(j.at("groups").get<std::vector<int>>());
  return p;
}

json encode_config(const FitConfig& c) {
  json j;
  j["feature_count"] = c.feature_count;
  j["components"] = c.components;
  j["lambda"] = c.lambda;
  json pens = json::array();
  for (const auto& p : c.penalty) pens.push_back(encode_penalty(p));
  j["penalty"] = pens;
  j["max_outer_iter"] = c.max_outer_iter;
  j["outer_tol"] = c.outer_tol;
  j["fista_budget"] = c.fista_budget;
  j["fista"] = {{"initial_step", c.fista.initial_step},
                {"max_iter", c.fista.max_iter},
                {"tol", c.fista.tol},
                {"max_backtracks", c.fista.max_backtracks}};
  j["seed"] = c.seed;
  return j;
}

FitConfig decode_config(const json& j) {
  FitConfig c;
  c.feature_count = j.at("feature_count").get<int>();
  c.components = j.at("components").get<int>();
  c.lambda = j.at("lambda").get<std::vector<double>>();
  c.penalty.clear();
  for (const auto& p : j.at("penalty")) c.penalty.push_back(decode_penalty(p));
  c.max_outer_iter = j.at("max_outer_iter").get<int>();
  c.outer_tol = j.at("outer_tol").get<double>();
  c.fista_budget = j.at("fista_budget").get<int>();
  const json& f = j.at("fista");
  c.fista.initial_step = f.at("initial_step").get<double>();
  c.fista.max_iter = f.at("max_iter").get<int>();
  c.fista.tol = f.at("tol").get<double>();
  c.fista.max_backtracks = f.at("max_backtracks").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_model(const FittedModel& m, const std::string& path) {
  json j;
  j["format_version"] = 1;
  j["array_encoding"] = kEncodingNote;
  j["config"] = encode_config(m.state.resolved);

  const OutcomeMeta& meta = m.state.outcome_meta;
  json jm;
  jm["kind"] = to_string(meta.kind);
  if (meta.kind == OutcomeKind::Categorical)
    jm["center"] = nullptr;
  else
    jm["center"] = encode_row_vector(meta.center);
  jm["class_names"] = meta.class_names;
  j["outcome_meta"] = jm;
  j["labels"] = meta.labels;

  json views = json::array();
  for (size_t d = 0; d < m.state.maps.size(); ++d) {
    const RandomFeatureMap& map = m.state.maps[d];
    views.push_back(json{{"nu", map.nu},
                         {"epsilon", encode_matrix(map.eps)},
                         {"b", encode_vector(map.b)},
                         {"gamma", encode_vector(map.gamma)},
                         {"A", encode_matrix(m.state.A[d])}});
  }
  j["views"] = views;

  j["G"] = encode_matrix(m.state.G);
  j["Theta"] = encode_matrix(m.state.Theta);
  j["U_train"] = encode_matrix(m.U_train);

  j["fit"] = {{"objective_trace", encode_std_vector(m.state.objective_trace)},
              {"ortho_trace", encode_std_vector(m.state.ortho_trace)},
              {"converged", m.state.converged},
              {"iterations", m.state.iterations}};

  if (m.view_center.empty()) {
    j["standardize"] = nullptr;
  } else {
    json centers = json::array(), scales = json::array();
    for (const auto& c : m.view_center) centers.push_back(encode_row_vector(c));
    for (const auto& s : m.view_scale) scales.push_back(encode_row_vector(s));
    j["standardize"] = {{"center", centers}, {"scale", scales}};
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), "IoError", "cannot open '" + tmp + "' for writing");
    out << j.dump() << '\n';
    require(out.good(), "IoError", "write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, "IoError", "cannot move model into place at '" + path + "'");
}

FittedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "IoError", "cannot open '" + path + "' for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  require(!in.bad(), "IoError", "read from '" + path + "' failed");

  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw Error("ModelFormat", std::string("model file is not valid JSON: ") + e.what());
  }

  try {
    require(j.contains("format_version") && j.at("format_version").is_number_integer(),
            "FormatVersionMismatch", "missing format_version");
    const int version = j.at("format_version").get<int>();
    require(version == 1, "FormatVersionMismatch",
            "unsupported model format version " + std::to_string(version));
    require(j.at("array_encoding").get<std::string>() == kEncodingNote,
            "ModelFormat", "unexpected array encoding");

    FittedModel m;
    m.state.resolved = decode_config(j.at("config"));

    const json& jm = j.at("outcome_meta");
    m.state.outcome_meta.kind = outcome_kind_from_string(jm.at("kind").get<std::string>());
    if (!jm.at("center").is_null())
      m.state.outcome_meta.center = decode_row_vector(jm.at("center"));
    m.state.outcome_meta.class_names =
        jm.at("class_names").get<std::vector<std::string>>();
    m.state.outcome_meta.labels = j.at("labels").get<std::vector<int>>();

    for (const auto& v : j.at("views")) {
      RandomFeatureMap map;
      map.nu = v.at("nu").get<double>();
      map.eps = decode_matrix(v.at("epsilon"));
      map.b = decode_vector(v.at("b"));
      map.gamma = decode_vector(v.at("gamma"));
      require(map.b.size() == map.eps.rows() && map.gamma.size() == map.eps.cols(),
              "ModelFormat", "feature map dimensions disagree");
      m.state.maps.push_back(std::move(map));
      m.state.A.push_back(decode_matrix(v.at("A")));
    }
    require(!m.state.maps.empty(), "ModelFormat", "model has no views");

    m.state.G = decode_matrix(j.at("G"));
    m.state.Theta = decode_matrix(j.at("Theta"));
    m.U_train = decode_matrix(j.at("U_train"));

    const json& jf = j.at("fit");
    m.state.objective_trace = decode_array1d(jf.at("objective_trace"));
    m.state.ortho_trace = decode_array1d(jf.at("ortho_trace"));
    m.state.converged = jf.at("converged").get<bool>();
    m.state.iterations = jf.at("iterations").get<int>();

    if (!j.at("standardize").is_null()) {
      const json& js = j.at("standardize");
      for (const auto& c : js.at("center")) m.view_center.push_back(decode_row_vector(c));
      for (const auto& s : js.at("scale")) m.view_scale.push_back(decode_row_vector(s));
      require(m.view_center.size() == m.state.maps.size() &&
                  m.view_scale.size() == m.state.maps.size(),
              "ModelFormat", "standardization entries must cover every view");
    }
    return m;
  } catch (const json::exception& e) {
    throw Error("ModelFormat", std::string("model file structure invalid: ") + e.what());
  }
}

}  // namespace mvrff
