#include "flexfem/params.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace flexfem::params {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

bool starts_with_word(std::string_view line, std::string_view word) {
  return line.size() > word.size() && line.substr(0, word.size()) == word &&
         (line[word.size()] == ' ' || line[word.size()] == '\t');
}

std::optional<std::int64_t> to_integer(const std::string &s) {
  std::int64_t v = 0;
  const char *first = s.data();
  const char *last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return v;
}

std::optional<double> to_real(const std::string &s) {
  if (s.empty()) return std::nullopt;
  char *end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
    return std::nullopt;
  return v;
}

}  // namespace

std::string to_string(Verbosity v) {
  switch (v) {
    case Verbosity::Minimal: return "minimal";
    case Verbosity::Standard: return "standard";
    case Verbosity::Full: return "full";
  }
  return "standard";
}

Verbosity verbosity_from_string(std::string_view s) {
  if (s == "minimal") return Verbosity::Minimal;
  if (s == "standard") return Verbosity::Standard;
  if (s == "full") return Verbosity::Full;
  throw ParamError("unknown verbosity level '" + std::string(s) + "'");
}

Format format_from_path(const std::string &path) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "prm") return Format::Prm;
  if (ext == "json") return Format::Json;
  throw ParamError("cannot infer parameter format from '" + path +
                   "' (expected .prm or .json)");
}

std::string validate(const Validator &validator, const std::string &value) {
  return std::visit(
      [&](const auto &v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, AnyString>) {
          return {};
        } else if constexpr (std::is_same_v<T, Integer>) {
          const auto x = to_integer(value);
          if (!x) return "'" + value + "' is not an integer";
          if (*x < v.min || *x > v.max)
            return "'" + value + "' is outside " + describe(validator);
          return {};
        } else if constexpr (std::is_same_v<T, Real>) {
          const auto x = to_real(value);
          if (!x) return "'" + value + "' is not a real number";
          if (*x < v.min || *x > v.max)
            return "'" + value + "' is outside " + describe(validator);
          return {};
        } else if constexpr (std::is_same_v<T, Bool>) {
          if (value == "true" || value == "false") return {};
          return "'" + value + "' is not a boolean (true|false)";
        } else {
          if (std::find(v.options.begin(), v.options.end(), value) !=
              v.options.end())
            return {};
          return "'" + value + "' is not one of " + describe(validator);
        }
      },
      validator);
}

std::string describe(const Validator &validator) {
  return std::visit(
      [](const auto &v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        std::ostringstream os;
        if constexpr (std::is_same_v<T, AnyString>) {
          os << "Anything";
        } else if constexpr (std::is_same_v<T, Integer>) {
          os << "Integer range " << v.min << "..." << v.max;
        } else if constexpr (std::is_same_v<T, Real>) {
          os << "Real range " << v.min << "..." << v.max;
        } else if constexpr (std::is_same_v<T, Bool>) {
          os << "Bool (true|false)";
        } else {
          os << "Selection ";
          for (std::size_t i = 0; i < v.options.size(); ++i)
            os << (i ? "|" : "") << v.options[i];
        }
        return os.str();
      },
      validator);
}

Path split_path(std::string_view slash_separated) {
  Path out;
  std::size_t start = 0;
  while (start <= slash_separated.size()) {
    const auto slash = slash_separated.find('/', start);
    const auto stop = slash == std::string_view::npos ? slash_separated.size()
                                                      : slash;
    auto part = trim(slash_separated.substr(start, stop - start));
    if (!part.empty()) out.push_back(std::move(part));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return out;
}

std::string join_path(const Path &path) {
  std::string out;
  for (const auto &p : path) out += (out.empty() ? "" : " / ") + p;
  return out.empty() ? "/" : out;
}

// ---------------------------------------------------------------------------
// File parsers

Overlay parse_prm(std::string_view text) {
  Overlay out;
  Path stack;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto stop = nl == std::string_view::npos ? text.size() : nl;
    std::string_view raw = text.substr(pos, stop - pos);
    pos = stop + 1;
    ++line_no;

    const auto hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) {
      if (nl == std::string_view::npos) break;
      continue;
    }

    const auto fail = [&](const std::string &what) {
      throw ParamError("prm syntax error at line " + std::to_string(line_no) +
                       ": " + what);
    };

    if (line == "end") {
      if (stack.empty()) fail("'end' without matching 'subsection'");
      stack.pop_back();
    } else if (starts_with_word(line, "subsection")) {
      auto name = trim(std::string_view(line).substr(10));
      if (name.empty()) fail("missing subsection name");
      stack.push_back(std::move(name));
    } else if (starts_with_word(line, "set")) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail("expected 'set <name> = <value>'");
      auto name = trim(std::string_view(line).substr(3, eq - 3));
      if (name.empty()) fail("missing parameter name");
      out.push_back({stack, std::move(name),
                     trim(std::string_view(line).substr(eq + 1))});
    } else {
      fail("unrecognized statement '" + line + "'");
    }
    if (nl == std::string_view::npos) break;
  }
  if (!stack.empty())
    throw ParamError("prm syntax error: subsection '" + stack.back() +
                     "' is not closed by 'end'");
  return out;
}

namespace {

void collect_json(const ordered_json &object, Path &path, Overlay &out) {
  for (const auto &[key, value] : object.items()) {
    if (value.is_object()) {
      path.push_back(key);
      collect_json(value, path, out);
      path.pop_back();
    } else if (value.is_string()) {
      out.push_back({path, key, value.get<std::string>()});
    } else if (value.is_boolean()) {
      out.push_back({path, key, value.get<bool>() ? "true" : "false"});
    } else if (value.is_number()) {
      out.push_back({path, key, value.dump()});
    } else {
      throw ParamError("json parameter '" + key + "' in " + join_path(path) +
                       " must be a string, number, boolean or object");
    }
  }
}

}  // namespace

Overlay parse_json(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw ParamError(std::string("malformed json: ") + e.what());
  }
  if (!doc.is_object()) throw ParamError("json parameters must be an object");
  Overlay out;
  Path path;
  collect_json(doc, path, out);
  return out;
}

Overlay parse(std::string_view text, Format format) {
  return format == Format::Prm ? parse_prm(text) : parse_json(text);
}

// ---------------------------------------------------------------------------
// ParamTree

struct ParamTree::Node {
  std::vector<std::pair<std::string, std::unique_ptr<Node>>> subsections;
  std::vector<std::pair<std::string, ParamEntry>> entries;

  Node *child(const std::string &name) {
    for (auto &[n, c] : subsections)
      if (n == name) return c.get();
    return nullptr;
  }
  const Node *child(const std::string &name) const {
    for (const auto &[n, c] : subsections)
      if (n == name) return c.get();
    return nullptr;
  }
  ParamEntry *find(const std::string &name) {
    for (auto &[n, e] : entries)
      if (n == name) return &e;
    return nullptr;
  }
  const ParamEntry *find(const std::string &name) const {
    for (const auto &[n, e] : entries)
      if (n == name) return &e;
    return nullptr;
  }
  std::unique_ptr<Node> clone() const {
    auto out = std::make_unique<Node>();
    out->entries = entries;
    for (const auto &[n, c] : subsections)
      out->subsections.emplace_back(n, c->clone());
    return out;
  }
  bool visible(Verbosity v) const {
    for (const auto &[n, e] : entries)
      if (e.verbosity <= v) return true;
    for (const auto &[n, c] : subsections)
      if (c->visible(v)) return true;
    return false;
  }
};

ParamTree::ParamTree() : root_(std::make_unique<Node>()) {}
ParamTree::ParamTree(const ParamTree &other)
    : root_(other.root_->clone()),
      cursor_(other.cursor_),
      cursor_marks_(other.cursor_marks_),
      declare_verbosity_(other.declare_verbosity_) {}
ParamTree &ParamTree::operator=(const ParamTree &other) {
  if (this != &other) {
    root_ = other.root_->clone();
    cursor_ = other.cursor_;
    cursor_marks_ = other.cursor_marks_;
    declare_verbosity_ = other.declare_verbosity_;
  }
  return *this;
}
ParamTree::ParamTree(ParamTree &&) noexcept = default;
ParamTree &ParamTree::operator=(ParamTree &&) noexcept = default;
ParamTree::~ParamTree() = default;

ParamTree::Node &ParamTree::node_at(const Path &path, bool create) {
  Node *node = root_.get();
  for (const auto &name : path) {
    if (name.empty()) throw ParamError("empty subsection name");
    Node *next = node->child(name);
    if (!next) {
      if (!create)
        throw ParamError("unknown subsection '" + join_path(path) + "'");
      if (node->find(name))
        throw ParamError("subsection '" + name +
                         "' clashes with an entry of the same name");
      node->subsections.emplace_back(name, std::make_unique<Node>());
      next = node->subsections.back().second.get();
    }
    node = next;
  }
  return *node;
}

const ParamTree::Node *ParamTree::find_node(const Path &path) const {
  const Node *node = root_.get();
  for (const auto &name : path) {
    node = node->child(name);
    if (!node) return nullptr;
  }
  return node;
}

void ParamTree::declare(const Path &path, const std::string &name,
                        const std::string &default_value, Validator validator,
                        Verbosity verbosity, const std::string &description) {
  if (name.empty()) throw ParamError("empty parameter name");
  if (name.find('=') != std::string::npos || name.find('#') != std::string::npos)
    throw ParamError("parameter name '" + name + "' contains '=' or '#'");
  if (const auto why = validate(validator, default_value); !why.empty())
    throw ParamError("default of '" + name + "' in " + join_path(path) +
                     " is invalid: " + why);
  Node &node = node_at(path, true);
  if (node.find(name) || node.child(name))
    throw ParamError("parameter '" + name + "' already declared in " +
                     join_path(path));
  node.entries.emplace_back(
      name, ParamEntry{default_value, default_value, description,
                       std::move(validator), verbosity});
}

void ParamTree::enter_subsection(const std::string &name) {
  cursor_marks_.push_back(cursor_.size());
  cursor_.push_back(trim(name));
}

void ParamTree::leave_subsection() { leave_subsection_path(); }

void ParamTree::enter_subsection_path(std::string_view slash_separated) {
  cursor_marks_.push_back(cursor_.size());
  for (auto &p : split_path(slash_separated)) cursor_.push_back(std::move(p));
}

void ParamTree::leave_subsection_path() {
  if (cursor_marks_.empty())
    throw ParamError("leave_subsection called at the root");
  cursor_.resize(cursor_marks_.back());
  cursor_marks_.pop_back();
}

void ParamTree::set_verbosity(Verbosity v) { declare_verbosity_ = v; }
void ParamTree::reset_verbosity() { declare_verbosity_ = Verbosity::Standard; }
Path ParamTree::current_path() const { return cursor_; }

void ParamTree::declare_entry(const std::string &name,
                              const std::string &default_value,
                              Validator validator,
                              const std::string &description) {
  declare(cursor_, name, default_value, std::move(validator),
          declare_verbosity_, description);
}

bool ParamTree::has_entry(const Path &path, const std::string &name) const {
  const Node *node = find_node(path);
  return node && node->find(name);
}

const ParamEntry &ParamTree::entry(const Path &path,
                                   const std::string &name) const {
  const Node *node = find_node(path);
  const ParamEntry *e = node ? node->find(name) : nullptr;
  if (!e)
    throw ParamError("unknown parameter '" + name + "' in " + join_path(path));
  return *e;
}

ParamEntry &ParamTree::mutable_entry(const Path &path,
                                     const std::string &name) {
  return const_cast<ParamEntry &>(std::as_const(*this).entry(path, name));
}

const std::string &ParamTree::get(const Path &path,
                                  const std::string &name) const {
  return entry(path, name).current_value;
}

const std::string &ParamTree::get(const std::string &name) const {
  return get(cursor_, name);
}

std::int64_t ParamTree::get_integer(const std::string &name) const {
  const auto v = to_integer(get(name));
  if (!v) throw ParamError("parameter '" + name + "' is not an integer");
  return *v;
}

double ParamTree::get_double(const std::string &name) const {
  const auto v = to_real(get(name));
  if (!v) throw ParamError("parameter '" + name + "' is not a real number");
  return *v;
}

bool ParamTree::get_bool(const std::string &name) const {
  const auto &v = get(name);
  if (v == "true") return true;
  if (v == "false") return false;
  throw ParamError("parameter '" + name + "' is not a boolean");
}

void ParamTree::set(const Path &path, const std::string &name,
                    const std::string &value) {
  apply(Overlay{{path, name, value}});
}

void ParamTree::check_overlay(const Overlay &overlay) const {
  for (const auto &a : overlay) {
    const Node *node = find_node(a.path);
    const ParamEntry *e = node ? node->find(a.name) : nullptr;
    if (!e)
      throw ParamError("unknown parameter '" + a.name + "' in " +
                       join_path(a.path));
    if (const auto why = validate(e->validator, a.value); !why.empty())
      throw ParamError("invalid value for '" + a.name + "' in " +
                       join_path(a.path) + ": " + why);
  }
}

void ParamTree::apply(const Overlay &overlay) {
  check_overlay(overlay);
  for (const auto &a : overlay)
    mutable_entry(a.path, a.name).current_value = a.value;
}

void ParamTree::apply_overrides(const Overlay &overlay) {
  check_overlay(overlay);
  for (const auto &a : overlay) {
    auto &e = mutable_entry(a.path, a.name);
    e.default_value = a.value;
    e.current_value = a.value;
  }
}

void ParamTree::parse_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParamError("cannot open parameter file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  apply(parse(ss.str(), format_from_path(path)));
}

namespace {

void emit_prm(const auto &node, Verbosity v, int depth, std::ostringstream &os) {
  const std::string indent(2 * depth, ' ');
  std::size_t width = 0;
  for (const auto &[name, e] : node.entries)
    if (e.verbosity <= v) width = std::max(width, name.size());

  bool first = true;
  for (const auto &[name, e] : node.entries) {
    if (e.verbosity > v) continue;
    if (!e.description.empty()) {
      if (!first) os << "\n";
      std::istringstream lines(e.description);
      for (std::string l; std::getline(lines, l);) os << indent << "# " << l << "\n";
    }
    first = false;
    os << indent << "set " << name << std::string(width - name.size(), ' ')
       << " = " << e.current_value << "\n";
  }
  for (const auto &[name, child] : node.subsections) {
    if (!child->visible(v)) continue;
    if (!first) os << "\n";
    first = false;
    os << indent << "subsection " << name << "\n";
    emit_prm(*child, v, depth + 1, os);
    os << indent << "end\n";
  }
}

ordered_json emit_json(const auto &node, Verbosity v) {
  ordered_json out = ordered_json::object();
  for (const auto &[name, e] : node.entries) {
    if (e.verbosity > v) continue;
    // Integers and booleans are written natively; everything else stays a
    // string so that the text of real numbers survives unchanged.
    if (std::holds_alternative<Bool>(e.validator))
      out[name] = e.current_value == "true";
    else if (std::holds_alternative<Integer>(e.validator))
      out[name] = *to_integer(e.current_value);
    else
      out[name] = e.current_value;
  }
  for (const auto &[name, child] : node.subsections)
    if (child->visible(v)) out[name] = emit_json(*child, v);
  return out;
}

void collect_entries(const auto &node, Verbosity v, Path &path, Overlay &out) {
  for (const auto &[name, e] : node.entries)
    if (e.verbosity <= v) out.push_back({path, name, e.current_value});
  for (const auto &[name, child] : node.subsections) {
    path.push_back(name);
    collect_entries(*child, v, path, out);
    path.pop_back();
  }
}

}  // namespace

std::string ParamTree::emit(Format format, Verbosity verbosity) const {
  if (format == Format::Json) return emit_json(*root_, verbosity).dump(2) + "\n";
  std::ostringstream os;
  emit_prm(*root_, verbosity, 0, os);
  return os.str();
}

void ParamTree::write_file(const std::string &path, Verbosity verbosity) const {
  const auto text = emit(format_from_path(path), verbosity);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParamError("cannot write parameter file '" + path + "'");
  out << text;
}

Overlay ParamTree::entries(Verbosity verbosity) const {
  Overlay out;
  Path path;
  collect_entries(*root_, verbosity, path, out);
  return out;
}

std::string format_real(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

}  // namespace flexfem::params
