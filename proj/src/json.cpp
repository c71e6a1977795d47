// SPDX-License-Identifier: Apache-2.0
#include "clawenv/json.hpp"

#include "clawenv/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <regex>

namespace clawenv {

namespace {

bool is_null_literal(const std::string& s) {
  return s.empty() || s == "~" || s == "null" || s == "Null" || s == "NULL";
}

std::optional<bool> bool_literal(const std::string& s) {
  if (s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "False" || s == "FALSE") return false;
  return std::nullopt;
}

std::optional<std::int64_t> int_literal(const std::string& s) {
  static const std::regex re(R"([-+]?[0-9]+)");
  if (!std::regex_match(s, re)) return std::nullopt;
  std::int64_t v = 0;
  const char* begin = s.data() + (s[0] == '+' ? 1 : 0);
  auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> float_literal(const std::string& s) {
  static const std::regex re(R"([-+]?(\.[0-9]+|[0-9]+(\.[0-9]*)?)([eE][-+]?[0-9]+)?)");
  if (!std::regex_match(s, re)) return std::nullopt;
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

Json scalar_to_json(const YAML::Node& node) {
  const std::string& s = node.Scalar();
  // "!" marks a quoted or block scalar: always a string.
  if (node.Tag() == "!") return s;
  if (is_null_literal(s)) return nullptr;
  if (auto b = bool_literal(s)) return *b;
  if (auto i = int_literal(s)) return *i;
  if (auto f = float_literal(s)) return *f;
  return s;
}

Json convert(const YAML::Node& node, const std::string& where, LineIndex* lines) {
  if (lines) (*lines)[where] = node.Mark().line + 1;
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_to_json(node);
    case YAML::NodeType::Sequence: {
      Json arr = Json::array();
      std::size_t i = 0;
      for (const auto& item : node) {
        arr.push_back(convert(item, where + "[" + std::to_string(i) + "]", lines));
        ++i;
      }
      return arr;
    }
    case YAML::NodeType::Map: {
      Json obj = Json::object();
      for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        obj[key] = convert(kv.second, where.empty() ? key : where + "." + key, lines);
      }
      return obj;
    }
  }
  return nullptr;
}

void emit(YAML::Emitter& out, const Json& v) {
  switch (v.type()) {
    case Json::value_t::null:
      out << YAML::Null;
      break;
    case Json::value_t::boolean:
      out << (v.get<bool>() ? "true" : "false");
      break;
    case Json::value_t::number_integer:
      out << v.get<std::int64_t>();
      break;
    case Json::value_t::number_unsigned:
      out << v.get<std::uint64_t>();
      break;
    case Json::value_t::number_float: {
      // Shortest round-trip representation, always with a float marker.
      double d = v.get<double>();
      std::string s = Json(d).dump();
      if (s.find_first_of(".eE") == std::string::npos && std::isfinite(d)) s += ".0";
      out << s;
      break;
    }
    case Json::value_t::string:
      out << YAML::DoubleQuoted << v.get<std::string>();
      break;
    case Json::value_t::array:
      out << YAML::BeginSeq;
      for (const auto& item : v) emit(out, item);
      out << YAML::EndSeq;
      break;
    case Json::value_t::object:
      out << YAML::BeginMap;
      for (const auto& [k, item] : v.items()) {
        out << YAML::Key << k << YAML::Value;
        emit(out, item);
      }
      out << YAML::EndMap;
      break;
    default:
      out << YAML::Null;
  }
}

}  // namespace

Json parse_yaml(std::string_view text, LineIndex* lines) {
  try {
    YAML::Node root = YAML::Load(std::string(text));
    return convert(root, "", lines);
  } catch (const YAML::Exception& e) {
    throw ParseError("", e.mark.line >= 0 ? e.mark.line + 1 : 0, e.msg);
  }
}

std::string emit_yaml(const Json& value) {
  YAML::Emitter out;
  out.SetIndent(2);
  emit(out, value);
  std::string s = out.c_str();
  s.push_back('\n');
  return s;
}

std::optional<Json> extract_json_object(std::string_view text) {
  // Try every '{' as a start, from the first, and take the first parseable balanced span.
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          auto parsed = Json::parse(text.substr(start, i - start + 1), nullptr, false);
          if (!parsed.is_discarded() && parsed.is_object()) return parsed;
          break;
        }
      }
    }
  }
  return std::nullopt;
}

std::string strip_code_fence(std::string_view text) {
  auto open = text.find("```");
  if (open == std::string_view::npos) return std::string(text);
  auto body_start = text.find('\n', open);
  if (body_start == std::string_view::npos) return std::string(text);
  auto close = text.find("```", body_start + 1);
  if (close == std::string_view::npos) return std::string(text.substr(body_start + 1));
  return std::string(text.substr(body_start + 1, close - body_start - 1));
}

}  // namespace clawenv
