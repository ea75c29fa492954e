#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldinfo/affine.hpp"
#include "ldinfo/boost.hpp"
#include "ldinfo/core.hpp"

namespace ldinfo {

using json = nlohmann::json;

/// Writing or reading a report/config file failed at the OS level.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format12(double x) {
  if (!std::isfinite(x)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// x rounded to 12 significant digits; non-finite values become null.
inline json round12(double x) {
  if (!std::isfinite(x)) return nullptr;
  return std::strtod(format12(x).c_str(), nullptr);
}

/// Compact JSON with floats printed at 12 significant digits; object keys
/// come out sorted, so equal values always render to equal bytes.
inline void dump12(const json& j, std::string& out) {
  switch (j.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += json(it.key()).dump();
        out += ':';
        dump12(it.value(), out);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        dump12(j[i], out);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float: {
      const std::string s = format12(j.get<double>());
      if (s.empty()) {
        out += "null";
      } else {
        out += s;
        if (s.find_first_of(".eEn") == std::string::npos) out += ".0";
      }
      break;
    }
    default:
      out += j.dump();
  }
}

inline std::string dump12(const json& j) {
  std::string s;
  dump12(j, s);
  return s;
}

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

inline json subspace_to_json(const AffineSubspace& s) {
  json j;
  j["q"] = s.q();
  j["l"] = s.l();
  j["dim"] = s.dim();
  j["basepoint"] = s.basepoint();
  j["basis"] = s.basis();
  return j;
}

inline std::vector<Hypothesis::Row> rows_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty()) throw InvalidArgument("class: 'rows' must be a nonempty array");
  std::vector<Hypothesis::Row> m;
  for (const auto& r : rows) {
    if (r.is_string()) {
      m.push_back(Hypothesis::from_string(r.get<std::string>()).labels());
    } else if (r.is_array()) {
      Hypothesis::Row row;
      for (const auto& b : r) {
        const int v = b.get<int>();
        if (v != 0 && v != 1) throw InvalidArgument("class: labels must be 0 or 1");
        row.push_back(static_cast<std::uint8_t>(v));
      }
      m.push_back(std::move(row));
    } else {
      throw InvalidArgument("class: each row is a bit string or an array of 0/1");
    }
  }
  return m;
}

/// Reads a class file {"domain_size": m, "rows": ["0011", ...]}; rows may
/// also be arrays of 0/1 and domain_size is optional.
inline HypothesisClass read_class_file(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  if (!j.contains("rows")) throw InvalidArgument(path.string() + ": missing 'rows'");
  HypothesisClass c = make_class(rows_from_json(j.at("rows")));
  if (j.contains("domain_size") && j.at("domain_size").get<std::size_t>() != c.domain_size()) {
    throw InvalidArgument(path.string() + ": domain_size does not match the row length");
  }
  return c;
}

/// Reads a distribution file {"pmf": [...], "target_id": int} against `c`.
inline RealizableDistribution read_distribution_file(const std::filesystem::path& path, const HypothesisClass& c) {
  const json j = read_json_file(path);
  try {
    return make_distribution(c, j.at("pmf").get<std::vector<double>>(), j.at("target_id").get<std::size_t>());
  } catch (const json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

/// {"labels": bits, "id": rank in `c`, "canonical_id": bits read as a number}
inline json hypothesis_to_json(const Hypothesis& h, const HypothesisClass* c = nullptr) {
  json j;
  j["labels"] = h.to_string();
  if (c) {
    if (auto id = c->id_of(h)) j["id"] = *id;
  }
  if (h.domain_size() <= 64) j["canonical_id"] = h.canonical_id();
  return j;
}

/// {"outcome": "function"|"failure", "g_maj": bits|null, "g_maj_id": int|null,
///  "counts": {bits: count}, "threshold": int}
inline json boost_outcome_to_json(const BoostOutcome& b) {
  json j;
  j["outcome"] = b.failed() ? "failure" : "function";
  j["g_maj"] = b.function ? json(b.function->to_string()) : json(nullptr);
  j["g_maj_id"] = b.function && b.function->domain_size() <= 64 ? json(b.function->canonical_id()) : json(nullptr);
  json counts = json::object();
  for (const auto& [h, c] : b.table.counts()) counts[h.to_string()] = c;
  j["counts"] = std::move(counts);
  j["threshold"] = b.threshold;
  return j;
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move report into place: " + path.string());
  }
}

}  // namespace ldinfo
