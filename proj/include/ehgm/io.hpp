#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ehgm/model_fitting.hpp"
#include "ehgm/types.hpp"

namespace ehgm {

/// Header names of the point-set columns. The label column is optional.
struct ColumnMap {
  std::string id = "id";
  std::string x = "x";
  std::string y = "y";
  std::string z = "z";
  std::string label = "label";
};

/// Parses "id=ID,x=X,..." overrides onto the default map. Throws InvalidArgument.
ColumnMap parse_column_map(const std::string& spec);

/// A point set as stored on disk: one id per point and, when the file has a
/// label column, a (possibly empty) label per point.
struct PointTable {
  PointSet points;
  std::vector<std::string> ids;
  std::vector<std::string> labels;  // empty when unlabeled

  bool labeled() const { return !labels.empty(); }
  /// Row of the point with this id. Throws InvalidArgument.
  int index_of_id(const std::string& id) const;
};

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);
/// Strict decimal parse of a whole field; nullopt on any trailing text.
std::optional<double> parse_double(std::string_view text);

/// Throws ParseError ("name:line:column: ...") for malformed rows and
/// DegenerateInput for non-finite or coincident points.
PointTable read_pointset(std::istream& in, const std::string& name, const ColumnMap& columns = {},
                         double min_separation = kDefaultMinSeparation);
PointTable load_pointset(const std::string& path, const ColumnMap& columns = {},
                         double min_separation = kDefaultMinSeparation);
void write_pointset(std::ostream& out, const PointTable& table);
void save_pointset(const std::string& path, const PointTable& table);

/// Ground-truth mapping from point labels: truth[v] = point labelled vertex_labels[v].
/// nullopt unless every vertex label occurs exactly once.
std::optional<std::vector<int>> ground_truth(const PointTable& table, const std::vector<std::string>& vertex_labels);

/// Annotated postures, one row per nucleus:
/// embryo,time,first_twitch,hatch,label,x,y,z. Rows of one (embryo, time)
/// frame form one posture; labels follow seam_cell_labels for the frame's pair count.
std::vector<AnnotatedSample> read_corpus(std::istream& in, const std::string& name);
std::vector<AnnotatedSample> load_corpus(const std::string& path);
void write_corpus(std::ostream& out, const std::vector<AnnotatedSample>& corpus);
void save_corpus(const std::string& path, const std::vector<AnnotatedSample>& corpus);

/// "TL=3,TR=7": vertex labels to point ids. Throws InvalidArgument for unknown
/// labels or ids and SeedConflict when a vertex is seeded twice.
SeedSet parse_seeds(const std::string& spec, const std::vector<std::string>& vertex_labels, const PointTable& table);

}  // namespace ehgm
