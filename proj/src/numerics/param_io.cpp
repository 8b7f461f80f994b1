#include "dualoop/numerics/param_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace dualoop {

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw std::runtime_error("read_params: truncated input");
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_params(std::ostream& out, const ParamStore& params) {
  out.write(kParamMagic, 4);
  put_le<std::uint32_t>(out, kParamFormatVersion);
  put_le<std::uint64_t>(out, params.size());
  for (const auto& e : params) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(e.value.rows()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(e.value.cols()));
    const double* data = e.value.data();
    for (Eigen::Index i = 0; i < e.value.size(); ++i) put_le<double>(out, data[i]);
  }
  if (!out) throw std::runtime_error("write_params: stream failure");
}

ParamStore read_params(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kParamMagic, 4) != 0) {
    throw std::runtime_error("read_params: bad magic (expected DLNP)");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kParamFormatVersion) {
    throw std::runtime_error("read_params: unsupported format version " + std::to_string(version));
  }
  const auto count = get_le<std::uint64_t>(in);
  ParamStore params;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto len = get_le<std::uint32_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (!in) throw std::runtime_error("read_params: truncated name");
    const auto rows = static_cast<Eigen::Index>(get_le<std::uint64_t>(in));
    const auto cols = static_cast<Eigen::Index>(get_le<std::uint64_t>(in));
    Matrix m(rows, cols);
    double* data = m.data();
    for (Eigen::Index i = 0; i < m.size(); ++i) data[i] = get_le<double>(in);
    params.add(std::move(name), std::move(m));
  }
  return params;
}

void save_params(const std::filesystem::path& path, const ParamStore& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  write_params(out, params);
}

ParamStore load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  return read_params(in);
}

std::string params_to_json(const ParamStore& params, int indent) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& e : params) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < e.value.rows(); ++r) {
      std::vector<double> row(e.value.row(r).data(), e.value.row(r).data() + e.value.cols());
      rows.push_back(row);
    }
    j[e.name] = {{"rows", e.value.rows()}, {"cols", e.value.cols()}, {"data", rows}};
  }
  return j.dump(indent);
}

void write_meta(const std::filesystem::path& param_path, const MetaFields& fields) {
  const auto path = param_path.string() + ".meta";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "format_version=" << kParamFormatVersion << '\n';
  for (const auto& [k, v] : fields) out << k << '=' << v << '\n';
}

MetaFields read_meta(const std::filesystem::path& param_path) {
  const auto path = param_path.string() + ".meta";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  MetaFields fields;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(path + ": bad line '" + line + "'");
    fields[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (fields["format_version"] != std::to_string(kParamFormatVersion)) {
    throw std::runtime_error(path + ": unsupported format_version " + fields["format_version"]);
  }
  return fields;
}

std::size_t meta_size(const MetaFields& fields, const std::string& key) {
  auto it = fields.find(key);
  if (it == fields.end()) throw std::runtime_error("checkpoint metadata lacks '" + key + "'");
  return static_cast<std::size_t>(std::stoull(it->second));
}

}  // namespace dualoop
