#include "glv/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "glv/errors.hpp"

namespace glv {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SelfIntersection: return "SelfIntersection";
    case ErrorCode::DegenerateLoop: return "DegenerateLoop";
    case ErrorCode::MeshFailure: return "MeshFailure";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ShootFailure: return "ShootFailure";
    case ErrorCode::OutOfTable: return "OutOfTable";
    case ErrorCode::VanishingData: return "VanishingData";
    case ErrorCode::NonIntegerWinding: return "NonIntegerWinding";
    case ErrorCode::VanishingModulus: return "VanishingModulus";
    case ErrorCode::NonSimplyConnected: return "NonSimplyConnected";
    case ErrorCode::InconsistentPhase: return "InconsistentPhase";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::GeometryError: return "GeometryError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FitError: return "FitError";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace glv

namespace glv::io {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, delim)) out.push_back(trim(cur));
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace glv::io
