#include "ufw/instance_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "ufw/prng.hpp"

static_assert(std::endian::native == std::endian::little,
              "instance payloads are little-endian; big-endian hosts need a swap pass");

namespace ufw {

using nlohmann::json;

namespace {

constexpr char kBase64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

json vec_to_json(const Vector& v) {
  return json{{"f64le", base64_encode(reinterpret_cast<const unsigned char*>(v.data()),
                                      sizeof(double) * static_cast<std::size_t>(v.size()))},
              {"len", v.size()}};
}

Vector vec_from_json(const json& j) {
  const auto bytes = base64_decode(j.at("f64le").get<std::string>());
  const auto len = j.at("len").get<Eigen::Index>();
  if (bytes.size() != sizeof(double) * static_cast<std::size_t>(len))
    throw std::runtime_error("instance: vector payload length mismatch");
  Vector v(len);
  std::memcpy(v.data(), bytes.data(), bytes.size());
  return v;
}

json mat_to_json(const Matrix& m) {
  return json{{"cols", m.cols()},
              {"f64le", base64_encode(reinterpret_cast<const unsigned char*>(m.data()),
                                      sizeof(double) * static_cast<std::size_t>(m.size()))},
              {"rows", m.rows()}};
}

Matrix mat_from_json(const json& j) {
  const auto bytes = base64_decode(j.at("f64le").get<std::string>());
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  if (bytes.size() != sizeof(double) * static_cast<std::size_t>(rows * cols))
    throw std::runtime_error("instance: matrix payload length mismatch");
  Matrix m(rows, cols);
  std::memcpy(m.data(), bytes.data(), bytes.size());
  return m;
}

// snr may be +infinity, which JSON numbers cannot carry.
json snr_to_json(double snr) {
  if (std::isfinite(snr)) return snr;
  return "inf";
}

double snr_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    throw std::runtime_error("instance: bad snr value");
  }
  return j.get<double>();
}

}  // namespace

std::string base64_encode(const unsigned char* data, std::size_t len) {
  std::string out;
  out.reserve(((len + 2) / 3) * 4);
  for (std::size_t i = 0; i < len; i += 3) {
    unsigned int chunk = data[i] << 16;
    if (i + 1 < len) chunk |= data[i + 1] << 8;
    if (i + 2 < len) chunk |= data[i + 2];
    out.push_back(kBase64Alphabet[(chunk >> 18) & 0x3F]);
    out.push_back(kBase64Alphabet[(chunk >> 12) & 0x3F]);
    out.push_back(i + 1 < len ? kBase64Alphabet[(chunk >> 6) & 0x3F] : '=');
    out.push_back(i + 2 < len ? kBase64Alphabet[chunk & 0x3F] : '=');
  }
  return out;
}

std::string base64_decode(const std::string& text) {
  auto value_of = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    if (c == '=') return -1;
    throw std::runtime_error("base64: invalid character");
  };
  if (text.size() % 4 != 0) throw std::runtime_error("base64: truncated input");
  std::string out;
  out.reserve((text.size() / 4) * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int t = 0; t < 4; ++t) {
      vals[t] = value_of(text[i + t]);
      if (vals[t] < 0) {
        vals[t] = 0;
        ++pad;
      }
    }
    const unsigned int chunk = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
    out.push_back(static_cast<char>((chunk >> 16) & 0xFF));
    if (pad < 2) out.push_back(static_cast<char>((chunk >> 8) & 0xFF));
    if (pad < 1) out.push_back(static_cast<char>(chunk & 0xFF));
  }
  return out;
}

std::string serialize_instance(const Instance& inst) {
  json doc;
  doc["format"] = "ufw-instance";
  doc["version"] = 1;
  if (const auto* t = std::get_if<TrendInstance>(&inst)) {
    doc["kind"] = "trend";
    doc["delta"] = t->delta;
    doc["spec"] = json{{"N", t->spec.N},     {"n", t->spec.n},
                       {"pieces", t->spec.pieces}, {"r", t->spec.r},
                       {"seed", t->spec.seed}, {"snr", snr_to_json(t->spec.snr)}};
    doc["arrays"] = json{{"A", mat_to_json(t->A)},
                         {"b", vec_to_json(t->b)},
                         {"x_star", vec_to_json(t->x_star)}};
  } else {
    const auto& m = std::get<MatrixInstance>(inst);
    doc["kind"] = "matrix";
    doc["delta"] = m.delta;
    doc["spec"] = json{{"delta_rel", m.spec.delta_rel}, {"m", m.spec.m},
                       {"n", m.spec.n},                 {"nnzr", m.spec.nnzr},
                       {"r", m.spec.r},                 {"r1", m.spec.r1},
                       {"seed", m.spec.seed},           {"snr", snr_to_json(m.spec.snr)}};
    std::vector<std::int64_t> omega_linear;
    omega_linear.reserve(m.omega.size());
    for (const auto& [i, j] : m.omega)
      omega_linear.push_back(static_cast<std::int64_t>(i) * m.spec.n + j);
    doc["arrays"] = json{
        {"P1", mat_to_json(m.P1)},
        {"b_omega", vec_to_json(m.b_omega)},
        {"ground_truth", mat_to_json(m.ground_truth)},
        {"omega",
         json{{"i64le",
               base64_encode(reinterpret_cast<const unsigned char*>(omega_linear.data()),
                             sizeof(std::int64_t) * omega_linear.size())},
              {"len", omega_linear.size()}}}};
  }
  return doc.dump(1) + "\n";
}

Instance parse_instance(const std::string& text) {
  json doc = json::parse(text);
  if (doc.at("format").get<std::string>() != "ufw-instance")
    throw std::runtime_error("instance: not a ufw-instance document");
  if (doc.at("version").get<int>() != 1)
    throw std::runtime_error("instance: unsupported version");
  const auto kind = doc.at("kind").get<std::string>();
  const auto& spec = doc.at("spec");
  const auto& arrays = doc.at("arrays");
  if (kind == "trend") {
    TrendInstance t;
    t.spec.N = spec.at("N").get<int>();
    t.spec.n = spec.at("n").get<int>();
    t.spec.pieces = spec.at("pieces").get<int>();
    t.spec.r = spec.at("r").get<int>();
    t.spec.seed = spec.at("seed").get<std::uint64_t>();
    t.spec.snr = snr_from_json(spec.at("snr"));
    t.delta = doc.at("delta").get<double>();
    t.A = mat_from_json(arrays.at("A"));
    t.b = vec_from_json(arrays.at("b"));
    t.x_star = vec_from_json(arrays.at("x_star"));
    return t;
  }
  if (kind == "matrix") {
    MatrixInstance m;
    m.spec.delta_rel = spec.at("delta_rel").get<double>();
    m.spec.m = spec.at("m").get<int>();
    m.spec.n = spec.at("n").get<int>();
    m.spec.nnzr = spec.at("nnzr").get<double>();
    m.spec.r = spec.at("r").get<int>();
    m.spec.r1 = spec.at("r1").get<int>();
    m.spec.seed = spec.at("seed").get<std::uint64_t>();
    m.spec.snr = snr_from_json(spec.at("snr"));
    m.delta = doc.at("delta").get<double>();
    m.P1 = mat_from_json(arrays.at("P1"));
    m.b_omega = vec_from_json(arrays.at("b_omega"));
    m.ground_truth = mat_from_json(arrays.at("ground_truth"));
    const auto& omega = arrays.at("omega");
    const auto bytes = base64_decode(omega.at("i64le").get<std::string>());
    const auto len = omega.at("len").get<std::size_t>();
    if (bytes.size() != sizeof(std::int64_t) * len)
      throw std::runtime_error("instance: omega payload length mismatch");
    std::vector<std::int64_t> linear(len);
    std::memcpy(linear.data(), bytes.data(), bytes.size());
    m.omega.reserve(len);
    for (const auto idx : linear)
      m.omega.emplace_back(static_cast<int>(idx / m.spec.n),
                           static_cast<int>(idx % m.spec.n));
    return m;
  }
  throw std::runtime_error("instance: unknown kind '" + kind + "'");
}

void save_instance(const std::string& path, const Instance& inst) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << serialize_instance(inst);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_instance(ss.str());
}

std::string instance_content_hash(const Instance& inst) {
  const std::string text = serialize_instance(inst);
  const auto h = fnv1a64(text.data(), text.size());
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ufw
