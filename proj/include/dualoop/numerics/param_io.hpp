#pragma once

#include "dualoop/numerics/tensor.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace dualoop {

inline constexpr char kParamMagic[4] = {'D', 'L', 'N', 'P'};
inline constexpr std::uint32_t kParamFormatVersion = 1;

/// Binary layout: "DLNP", u32 version, u64 entry count, then per entry
/// u32 name length, name bytes, u64 rows, u64 cols, rows*cols f64 values.
/// All integers and floats little-endian.
void write_params(std::ostream& out, const ParamStore& params);
ParamStore read_params(std::istream& in);

void save_params(const std::filesystem::path& path, const ParamStore& params);
ParamStore load_params(const std::filesystem::path& path);

/// Debug dump; not a canonical format.
std::string params_to_json(const ParamStore& params, int indent = 1);

}  // namespace dualoop

namespace dualoop {

using MetaFields = std::map<std::string, std::string>;

/// Checkpoint sidecar: `<path>.meta`, key=value lines.
void write_meta(const std::filesystem::path& param_path, const MetaFields& fields);
MetaFields read_meta(const std::filesystem::path& param_path);
std::size_t meta_size(const MetaFields& fields, const std::string& key);

}  // namespace dualoop
