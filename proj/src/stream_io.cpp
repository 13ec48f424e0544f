#include "streampca/stream_io.hpp"

#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>

#include "streampca/errors.hpp"

namespace streampca {

namespace {

void append_double(std::string& out, double v) {
  char buf[48];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw IoError("failed to format a stream value");
  out.append(buf, ptr);
}

double parse_double(std::string_view token, long line_no) {
  size_t lo = 0, hi = token.size();
  while (lo < hi && (token[lo] == ' ' || token[lo] == '\t')) ++lo;
  while (hi > lo && (token[hi - 1] == ' ' || token[hi - 1] == '\t')) --hi;
  double value = 0;
  auto [ptr, ec] = std::from_chars(token.data() + lo, token.data() + hi, value);
  if (ec != std::errc() || ptr != token.data() + hi || lo == hi) {
    throw ParseError("not a decimal float: '" + std::string(token) + "'", line_no);
  }
  if (!std::isfinite(value)) {
    throw ParseError("non-finite value in stream row", line_no);
  }
  return value;
}

}  // namespace

void save_stream(const std::string& path, const std::vector<StreamRecord>& records) {
  const Eigen::Index d = records.empty() ? 0 : records.front().x.size();
  bool split = !records.empty();
  for (const StreamRecord& r : records) {
    if (r.x.size() != d || !r.x.allFinite()) {
      throw InvalidInput("save_stream: records must share one finite dimension");
    }
    split = split && r.split_known && r.q.size() == d && r.v.size() == d &&
            r.q.allFinite() && r.v.allFinite();
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);

  std::string line;
  line.reserve(static_cast<size_t>(d) * 26 * (split ? 3 : 1) + 64);
  char header[96];
  std::snprintf(header, sizeof(header), "#streampca-v1 d=%" PRId64 " n=%zu split=%d\n",
                static_cast<std::int64_t>(d), records.size(), split ? 1 : 0);
  out << header;
  for (const StreamRecord& r : records) {
    line.clear();
    for (Eigen::Index i = 0; i < d; ++i) {
      if (i) line.push_back(',');
      append_double(line, r.x[i]);
    }
    if (split) {
      for (Eigen::Index i = 0; i < d; ++i) {
        line.push_back(',');
        append_double(line, r.q[i]);
      }
      for (Eigen::Index i = 0; i < d; ++i) {
        line.push_back(',');
        append_double(line, r.v[i]);
      }
    }
    line.push_back('\n');
    out << line;
  }
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

std::vector<StreamRecord> load_stream(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing stream header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::int64_t d = -1, n = -1;
  int split = -1;
  if (std::sscanf(line.c_str(), "#streampca-v1 d=%" SCNd64 " n=%" SCNd64 " split=%d",
                  &d, &n, &split) != 3) {
    throw ParseError("unrecognized stream header: '" + line + "'", 1);
  }
  if (d < 0 || n < 0 || (split != 0 && split != 1) || (n > 0 && d == 0)) {
    throw ParseError("invalid stream header fields", 1);
  }

  const std::int64_t want = split ? 3 * d : d;
  std::vector<StreamRecord> records;
  records.reserve(static_cast<size_t>(n));
  for (std::int64_t row = 0; row < n; ++row) {
    const long line_no = static_cast<long>(row) + 2;
    if (!std::getline(in, line)) {
      throw ParseError("stream ends early: header promised " + std::to_string(n) +
                           " records",
                       line_no);
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();

    StreamRecord rec;
    rec.x = Vector(d);
    if (split) {
      rec.q = Vector(d);
      rec.v = Vector(d);
    }
    std::int64_t field = 0;
    size_t start = 0;
    std::string_view view(line);
    while (true) {
      const size_t comma = view.find(',', start);
      const std::string_view token =
          view.substr(start, comma == std::string_view::npos ? comma : comma - start);
      if (field >= want) {
        throw ParseError("row has more than " + std::to_string(want) + " fields",
                         line_no);
      }
      const double value = parse_double(token, line_no);
      if (field < d) {
        rec.x[field] = value;
      } else if (field < 2 * d) {
        rec.q[field - d] = value;
      } else {
        rec.v[field - 2 * d] = value;
      }
      ++field;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (field != want) {
      throw ParseError("row has " + std::to_string(field) + " fields, expected " +
                           std::to_string(want),
                       line_no);
    }
    if (split) {
      rec.split_known = true;
    } else {
      rec.q = rec.x;
      rec.v = Vector::Zero(d);
      rec.split_known = false;
    }
    records.push_back(std::move(rec));
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) {
      throw ParseError("unexpected content after the promised " + std::to_string(n) +
                           " records",
                       static_cast<long>(n) + 2);
    }
  }
  return records;
}

}  // namespace streampca
