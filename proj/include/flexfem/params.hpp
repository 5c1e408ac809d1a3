#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flexfem/common.hpp"

namespace flexfem::params {

class ParamError : public Error {
 public:
  using Error::Error;
};

/// Visibility class of a parameter in generated files. Ordered:
/// Minimal < Standard < Full.
enum class Verbosity { Minimal = 0, Standard = 1, Full = 2 };

std::string to_string(Verbosity v);
Verbosity verbosity_from_string(std::string_view s);

enum class Format { Prm, Json };

/// Picks the file format from the path suffix (".prm" or ".json").
Format format_from_path(const std::string &path);

struct AnyString {};
struct Integer {
  std::int64_t min = INT64_MIN;
  std::int64_t max = INT64_MAX;
};
struct Real {
  double min = -1e300;
  double max = 1e300;
};
struct Bool {};
struct Selection {
  std::vector<std::string> options;
};

using Validator = std::variant<AnyString, Integer, Real, Bool, Selection>;

/// Returns an empty string when `value` is accepted, otherwise the reason.
std::string validate(const Validator &validator, const std::string &value);
std::string describe(const Validator &validator);

struct ParamEntry {
  std::string default_value;
  std::string current_value;
  std::string description;
  Validator validator;
  Verbosity verbosity = Verbosity::Standard;
};

/// Subsection path from the root, e.g. {"Problem", "Linear solver"}.
using Path = std::vector<std::string>;

/// Splits "Problem / Linear solver" into trimmed components.
Path split_path(std::string_view slash_separated);
std::string join_path(const Path &path);

/// One `set` statement found in a parameter file.
struct Assignment {
  Path path;
  std::string name;
  std::string value;

  bool operator==(const Assignment &) const = default;
};

using Overlay = std::vector<Assignment>;

Overlay parse_prm(std::string_view text);
Overlay parse_json(std::string_view text);
Overlay parse(std::string_view text, Format format);

/// Hierarchical store of declared parameters.
///
/// Besides explicit-path access, the tree keeps a cursor so that models can
/// declare and read their parameters relative to their own subsection:
///
///   tree.enter_subsection_path("Problem / Linear solver");
///   tree.declare_entry("Type", "GMRES", Selection{{"CG", "GMRES"}}, "...");
///   tree.leave_subsection_path();
class ParamTree {
 public:
  ParamTree();
  ParamTree(const ParamTree &other);
  ParamTree &operator=(const ParamTree &other);
  ParamTree(ParamTree &&) noexcept;
  ParamTree &operator=(ParamTree &&) noexcept;
  ~ParamTree();

  void declare(const Path &path, const std::string &name,
               const std::string &default_value, Validator validator,
               Verbosity verbosity, const std::string &description);

  // Cursor-relative interface.
  void enter_subsection(const std::string &name);
  void leave_subsection();
  void enter_subsection_path(std::string_view slash_separated);
  void leave_subsection_path();
  void set_verbosity(Verbosity v);
  void reset_verbosity();
  Path current_path() const;

  void declare_entry(const std::string &name, const std::string &default_value,
                     Validator validator, const std::string &description = "");

  bool has_entry(const Path &path, const std::string &name) const;
  const ParamEntry &entry(const Path &path, const std::string &name) const;

  const std::string &get(const Path &path, const std::string &name) const;
  const std::string &get(const std::string &name) const;
  std::int64_t get_integer(const std::string &name) const;
  double get_double(const std::string &name) const;
  bool get_bool(const std::string &name) const;

  /// Sets the current value of a declared entry.
  void set(const Path &path, const std::string &name, const std::string &value);

  /// Applies file contents to current values. All assignments are checked
  /// before any is committed.
  void apply(const Overlay &overlay);
  /// Replaces declared defaults (and current values) atomically.
  void apply_overrides(const Overlay &overlay);

  /// Reads a prm or json file and applies it.
  void parse_file(const std::string &path);

  std::string emit(Format format, Verbosity verbosity) const;
  void write_file(const std::string &path, Verbosity verbosity) const;

  /// All (path, name, value) triples visible at the given verbosity.
  Overlay entries(Verbosity verbosity) const;

 private:
  struct Node;
  Node &node_at(const Path &path, bool create);
  const Node *find_node(const Path &path) const;
  ParamEntry &mutable_entry(const Path &path, const std::string &name);
  void check_overlay(const Overlay &overlay) const;

  std::unique_ptr<Node> root_;
  Path cursor_;
  std::vector<std::size_t> cursor_marks_;
  Verbosity declare_verbosity_ = Verbosity::Standard;
};

/// Shortest text that parses back to the same double.
std::string format_real(double value);

/// Parsed command line of a flexfem executable.
struct CliOptions {
  bool help = false;
  std::optional<Verbosity> generate;
  std::string params_file;
  std::string output_dir = "output";
  std::vector<std::string> app_args;
};

/// Recognizes -h/--help, -g/--generate-params [minimal|full],
/// -f/--params-file, -o/--output-directory. Positional tokens are kept in
/// app_args; unknown flags throw ParamError carrying the usage text.
CliOptions parse_cli(const std::vector<std::string> &args);
std::string cli_usage(const std::string &program);

}  // namespace flexfem::params
