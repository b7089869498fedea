#include "ehgm/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ehgm/error.hpp"
#include "ehgm/posture_features.hpp"

namespace ehgm {

namespace {

struct Field {
  std::string text;
  int column;  // 1-based character column where the field starts
};

std::vector<Field> split_row(const std::string& line) {
  std::vector<Field> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    const std::size_t end = comma == std::string::npos ? line.size() : comma;
    fields.push_back({line.substr(start, end - start), static_cast<int>(start) + 1});
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void parse_fail(const std::string& name, int line, int column, const std::string& what) {
  throw Error(ErrorCode::ParseError, name + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what);
}

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

double field_double(const Field& f, const std::string& name, int line, const std::string& column) {
  const auto value = parse_double(f.text);
  if (!value) parse_fail(name, line, f.column, "expected a number in column '" + column + "', got '" + f.text + "'");
  return *value;
}

std::map<std::string, std::size_t> header_index(const std::vector<Field>& header, const std::string& name) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!index.emplace(header[i].text, i).second) {
      parse_fail(name, 1, header[i].column, "duplicate column '" + header[i].text + "'");
    }
  }
  return index;
}

std::size_t require_column(const std::map<std::string, std::size_t>& index, const std::string& column,
                           const std::string& name) {
  const auto it = index.find(column);
  if (it == index.end()) parse_fail(name, 1, 1, "missing column '" + column + "'");
  return it->second;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  return out;
}

}  // namespace

ColumnMap parse_column_map(const std::string& spec) {
  ColumnMap map;
  if (spec.empty()) return map;
  std::stringstream stream(spec);
  std::string item;
  while (std::getline(stream, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "column map entry '" + item + "' needs '='");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    if (value.empty()) throw Error(ErrorCode::InvalidArgument, "empty column name for '" + key + "'");
    if (key == "id") map.id = value;
    else if (key == "x") map.x = value;
    else if (key == "y") map.y = value;
    else if (key == "z") map.z = value;
    else if (key == "label") map.label = value;
    else throw Error(ErrorCode::InvalidArgument, "unknown column key '" + key + "'");
  }
  return map;
}

int PointTable::index_of_id(const std::string& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return static_cast<int>(i);
  }
  throw Error(ErrorCode::InvalidArgument, "no point with id '" + id + "'");
}

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || result.ec != std::errc() || result.ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

PointTable read_pointset(std::istream& in, const std::string& name, const ColumnMap& columns, double min_separation) {
  std::string line;
  if (!read_line(in, line)) parse_fail(name, 1, 1, "empty file");
  const auto header = split_row(line);
  const auto index = header_index(header, name);
  const std::size_t id_col = require_column(index, columns.id, name);
  const std::size_t x_col = require_column(index, columns.x, name);
  const std::size_t y_col = require_column(index, columns.y, name);
  const std::size_t z_col = require_column(index, columns.z, name);
  const auto label_it = index.find(columns.label);
  const bool labeled = label_it != index.end();

  PointTable table;
  std::vector<Eigen::Vector3d> points;
  std::set<std::string> seen;
  int line_number = 1;
  while (read_line(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const auto fields = split_row(line);
    if (fields.size() != header.size()) {
      parse_fail(name, line_number, 1,
                 "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    const auto& id = fields[id_col];
    if (id.text.empty()) parse_fail(name, line_number, id.column, "empty id");
    if (!seen.insert(id.text).second) parse_fail(name, line_number, id.column, "duplicate id '" + id.text + "'");
    points.emplace_back(field_double(fields[x_col], name, line_number, columns.x),
                        field_double(fields[y_col], name, line_number, columns.y),
                        field_double(fields[z_col], name, line_number, columns.z));
    table.ids.push_back(id.text);
    if (labeled) table.labels.push_back(fields[label_it->second].text);
  }
  table.points = PointSet(std::move(points), min_separation);
  return table;
}

PointTable load_pointset(const std::string& path, const ColumnMap& columns, double min_separation) {
  auto in = open_input(path);
  return read_pointset(in, path, columns, min_separation);
}

void write_pointset(std::ostream& out, const PointTable& table) {
  out << (table.labeled() ? "id,x,y,z,label\n" : "id,x,y,z\n");
  for (int i = 0; i < table.points.size(); ++i) {
    const auto& p = table.points[i];
    out << table.ids[static_cast<std::size_t>(i)] << ',' << format_double(p.x()) << ',' << format_double(p.y()) << ','
        << format_double(p.z());
    if (table.labeled()) out << ',' << table.labels[static_cast<std::size_t>(i)];
    out << '\n';
  }
}

void save_pointset(const std::string& path, const PointTable& table) {
  auto out = open_output(path);
  write_pointset(out, table);
}

std::optional<std::vector<int>> ground_truth(const PointTable& table, const std::vector<std::string>& vertex_labels) {
  if (!table.labeled()) return std::nullopt;
  std::vector<int> truth;
  for (const auto& label : vertex_labels) {
    int found = -1;
    for (std::size_t i = 0; i < table.labels.size(); ++i) {
      if (table.labels[i] != label) continue;
      if (found >= 0) return std::nullopt;
      found = static_cast<int>(i);
    }
    if (found < 0) return std::nullopt;
    truth.push_back(found);
  }
  return truth;
}

std::vector<AnnotatedSample> read_corpus(std::istream& in, const std::string& name) {
  static const std::vector<std::string> kColumns = {"embryo", "time", "first_twitch", "hatch", "label", "x", "y", "z"};
  std::string line;
  if (!read_line(in, line)) parse_fail(name, 1, 1, "empty file");
  const auto header = split_row(line);
  const auto index = header_index(header, name);
  std::vector<std::size_t> col;
  for (const auto& c : kColumns) col.push_back(require_column(index, c, name));

  struct Frame {
    AnnotatedSample sample;
    std::map<std::string, Eigen::Vector3d> nuclei;
    int first_line;
  };
  std::vector<Frame> frames;
  std::map<std::pair<std::string, std::string>, std::size_t> frame_of;
  int line_number = 1;
  while (read_line(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const auto fields = split_row(line);
    if (fields.size() != header.size()) {
      parse_fail(name, line_number, 1,
                 "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    const auto& embryo = fields[col[0]];
    const auto& time = fields[col[1]];
    const auto key = std::make_pair(embryo.text, time.text);
    auto [it, inserted] = frame_of.emplace(key, frames.size());
    if (inserted) {
      Frame frame;
      frame.sample.embryo_id = embryo.text;
      frame.sample.time = field_double(time, name, line_number, "time");
      frame.sample.first_twitch = field_double(fields[col[2]], name, line_number, "first_twitch");
      frame.sample.hatch = field_double(fields[col[3]], name, line_number, "hatch");
      frame.first_line = line_number;
      frames.push_back(std::move(frame));
    }
    auto& frame = frames[it->second];
    const auto& label = fields[col[4]];
    const Eigen::Vector3d p(field_double(fields[col[5]], name, line_number, "x"),
                            field_double(fields[col[6]], name, line_number, "y"),
                            field_double(fields[col[7]], name, line_number, "z"));
    if (!frame.nuclei.emplace(label.text, p).second) {
      parse_fail(name, line_number, label.column, "label '" + label.text + "' repeated within a frame");
    }
  }

  std::vector<AnnotatedSample> corpus;
  for (auto& frame : frames) {
    const int pairs = static_cast<int>(frame.nuclei.size()) / 2;
    if (pairs < 2 || frame.nuclei.size() % 2 != 0) {
      parse_fail(name, frame.first_line, 1, "frame needs an even number (>= 4) of labelled nuclei, found " +
                                                std::to_string(frame.nuclei.size()));
    }
    const auto labels = seam_cell_labels(pairs);
    std::vector<Eigen::Vector3d> ordered;
    for (const auto& label : labels) {
      const auto it = frame.nuclei.find(label);
      if (it == frame.nuclei.end()) parse_fail(name, frame.first_line, 1, "frame is missing " + label);
      ordered.push_back(it->second);
    }
    for (int i = 0; i < pairs; ++i) {
      frame.sample.posture.left.push_back(ordered[static_cast<std::size_t>(2 * i)]);
      frame.sample.posture.right.push_back(ordered[static_cast<std::size_t>(2 * i + 1)]);
    }
    corpus.push_back(std::move(frame.sample));
  }
  return corpus;
}

std::vector<AnnotatedSample> load_corpus(const std::string& path) {
  auto in = open_input(path);
  return read_corpus(in, path);
}

void write_corpus(std::ostream& out, const std::vector<AnnotatedSample>& corpus) {
  out << "embryo,time,first_twitch,hatch,label,x,y,z\n";
  for (const auto& s : corpus) {
    const auto labels = seam_cell_labels(s.posture.pair_count());
    const auto points = posture_points(s.posture);
    for (std::size_t v = 0; v < points.size(); ++v) {
      out << s.embryo_id << ',' << format_double(s.time) << ',' << format_double(s.first_twitch) << ','
          << format_double(s.hatch) << ',' << labels[v] << ',' << format_double(points[v].x()) << ','
          << format_double(points[v].y()) << ',' << format_double(points[v].z()) << '\n';
    }
  }
}

void save_corpus(const std::string& path, const std::vector<AnnotatedSample>& corpus) {
  auto out = open_output(path);
  write_corpus(out, corpus);
}

SeedSet parse_seeds(const std::string& spec, const std::vector<std::string>& vertex_labels, const PointTable& table) {
  SeedSet seeds;
  if (spec.empty()) return seeds;
  std::stringstream stream(spec);
  std::string item;
  while (std::getline(stream, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "seed '" + item + "' needs the form LABEL=ID");
    const std::string label = item.substr(0, eq);
    const auto v = std::find(vertex_labels.begin(), vertex_labels.end(), label);
    if (v == vertex_labels.end()) throw Error(ErrorCode::InvalidArgument, "unknown vertex label '" + label + "'");
    const int vertex = static_cast<int>(v - vertex_labels.begin());
    const int point = table.index_of_id(item.substr(eq + 1));
    if (!seeds.fixed.emplace(vertex, point).second) {
      throw Error(ErrorCode::SeedConflict, "vertex " + label + " is seeded twice");
    }
  }
  return seeds;
}

}  // namespace ehgm
