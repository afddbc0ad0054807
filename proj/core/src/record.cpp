#include "behc/record.hpp"

#include <cmath>
#include <cstdio>

namespace behc {

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

}  // namespace

std::string OutputRecord::format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

OutputRecord::OutputRecord(const std::string& command) {
  put("schema", "1");
  put("command", command);
}

void OutputRecord::put(const std::string& key, double value) {
  Field f;
  f.tag = Tag::Real;
  f.key = key;
  f.d = value;
  fields_.push_back(std::move(f));
}

void OutputRecord::put_int(const std::string& key, long long value) {
  Field f;
  f.tag = Tag::Integer;
  f.key = key;
  f.i = value;
  fields_.push_back(std::move(f));
}

void OutputRecord::put(const std::string& key, const std::string& value) {
  Field f;
  f.tag = Tag::Text;
  f.key = key;
  f.s = value;
  fields_.push_back(std::move(f));
}

void OutputRecord::put(const std::string& key, const char* value) { put(key, std::string(value)); }

void OutputRecord::put(const std::string& key, bool value) {
  Field f;
  f.tag = Tag::Boolean;
  f.key = key;
  f.b = value;
  fields_.push_back(std::move(f));
}

std::string OutputRecord::text() const {
  std::string out;
  for (const Field& f : fields_) {
    out += f.key;
    out += '=';
    switch (f.tag) {
      case Tag::Real: out += format_double(f.d); break;
      case Tag::Integer: out += std::to_string(f.i); break;
      case Tag::Text: out += f.s; break;
      case Tag::Boolean: out += f.b ? "true" : "false"; break;
    }
    out += '\n';
  }
  return out;
}

std::string OutputRecord::structured() const {
  std::string out = "{";
  bool first = true;
  for (const Field& f : fields_) {
    if (!first) out += ",";
    first = false;
    out += '"';
    out += json_escape(f.key);
    out += "\":";
    switch (f.tag) {
      case Tag::Real:
        if (std::isfinite(f.d)) {
          out += format_double(f.d);
        } else {
          out += '"';
          out += format_double(f.d);
          out += '"';
        }
        break;
      case Tag::Integer: out += std::to_string(f.i); break;
      case Tag::Text:
        out += '"';
        out += json_escape(f.s);
        out += '"';
        break;
      case Tag::Boolean: out += f.b ? "true" : "false"; break;
    }
  }
  out += "}";
  return out;
}

}  // namespace behc
