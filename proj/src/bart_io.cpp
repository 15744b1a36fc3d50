#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "satclass/bart.hpp"
#include "satclass/io.hpp"

namespace satclass {

namespace {

constexpr const char* kMagic = "satclass-bart";
constexpr int kVersion = 1;

void write_tree(std::ostream& out, const Tree& tree, int id) {
  const auto& n = tree.node(id);
  if (n.is_leaf()) {
    out << "T " << io::format_double(n.mu) << '\n';
    return;
  }
  out << "I " << n.var << ' ' << n.cut << '\n';
  write_tree(out, tree, n.left);
  write_tree(out, tree, n.right);
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::istringstream next(const char* expected) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty()) return std::istringstream(line);
    }
    fail(std::string("unexpected end of model, expected ") + expected);
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCategory::Parse, "model line " + std::to_string(line_) + ": " + what);
  }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

std::string token(std::istringstream& line) {
  std::string t;
  line >> t;
  return t;
}

int read_tree_nodes(LineReader& reader, std::vector<TreeNode>& nodes, const CutpointGrid& grid) {
  auto line = reader.next("tree node");
  const auto kind = token(line);
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (kind == "T") {
    nodes[static_cast<std::size_t>(id)].mu = io::parse_double(token(line), "leaf value");
    return id;
  }
  if (kind != "I") reader.fail("expected 'I' or 'T' record");
  const int var = static_cast<int>(io::parse_integer(token(line), "split variable"));
  const int cut = static_cast<int>(io::parse_integer(token(line), "split cut"));
  if (var < 0 || var >= grid.dimension() || cut < 0 || cut >= grid.count(var)) {
    reader.fail("split rule outside the cutpoint grid");
  }
  nodes[static_cast<std::size_t>(id)].var = var;
  nodes[static_cast<std::size_t>(id)].cut = cut;
  const int left = read_tree_nodes(reader, nodes, grid);
  const int right = read_tree_nodes(reader, nodes, grid);
  nodes[static_cast<std::size_t>(id)].left = left;
  nodes[static_cast<std::size_t>(id)].right = right;
  return id;
}

}  // namespace

void write_posterior(std::ostream& out, const PosteriorDraws& posterior) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "m " << posterior.num_trees() << " S " << posterior.size() << " p " << posterior.dimension() << '\n';
  out << "response_center " << io::format_double(posterior.response_center) << " response_scale "
      << io::format_double(posterior.response_scale) << '\n';
  for (Index v = 0; v < posterior.dimension(); ++v) {
    out << "grid " << v << ' ' << posterior.grid.count(v);
    for (double c : posterior.grid.cuts[static_cast<std::size_t>(v)]) out << ' ' << io::format_double(c);
    out << '\n';
  }
  for (Index s = 0; s < posterior.size(); ++s) {
    const auto& draw = posterior.draws[static_cast<std::size_t>(s)];
    out << "draw " << s << " sigma " << io::format_double(draw.sigma) << '\n';
    for (const auto& tree : draw.trees) write_tree(out, tree, 0);
  }
  out << "end\n";
}

PosteriorDraws read_posterior(std::istream& in) {
  LineReader reader(in);
  auto header = reader.next("header");
  if (token(header) != kMagic) reader.fail("not a satclass-bart model");
  if (io::parse_integer(token(header), "version") != kVersion) reader.fail("unsupported model version");

  auto dims = reader.next("dimensions");
  if (token(dims) != "m") reader.fail("expected m");
  const auto m = io::parse_integer(token(dims), "m");
  if (token(dims) != "S") reader.fail("expected S");
  const auto draws = io::parse_integer(token(dims), "S");
  if (token(dims) != "p") reader.fail("expected p");
  const auto p = io::parse_integer(token(dims), "p");
  if (m < 0 || draws < 0 || p < 1) reader.fail("bad dimensions");

  PosteriorDraws posterior;
  auto response = reader.next("response");
  if (token(response) != "response_center") reader.fail("expected response_center");
  posterior.response_center = io::parse_double(token(response), "response_center");
  if (token(response) != "response_scale") reader.fail("expected response_scale");
  posterior.response_scale = io::parse_double(token(response), "response_scale");

  posterior.grid.cuts.resize(static_cast<std::size_t>(p));
  for (long long v = 0; v < p; ++v) {
    auto line = reader.next("grid");
    if (token(line) != "grid" || io::parse_integer(token(line), "grid index") != v) reader.fail("expected grid line");
    const auto count = io::parse_integer(token(line), "grid count");
    auto& cuts = posterior.grid.cuts[static_cast<std::size_t>(v)];
    for (long long c = 0; c < count; ++c) cuts.push_back(io::parse_double(token(line), "cutpoint"));
  }
  posterior.draws.resize(static_cast<std::size_t>(draws));
  for (long long s = 0; s < draws; ++s) {
    auto line = reader.next("draw");
    if (token(line) != "draw" || io::parse_integer(token(line), "draw index") != s) reader.fail("expected draw line");
    if (token(line) != "sigma") reader.fail("expected sigma");
    auto& draw = posterior.draws[static_cast<std::size_t>(s)];
    draw.sigma = io::parse_double(token(line), "sigma");
    draw.trees.reserve(static_cast<std::size_t>(m));
    for (long long j = 0; j < m; ++j) {
      std::vector<TreeNode> nodes;
      read_tree_nodes(reader, nodes, posterior.grid);
      draw.trees.push_back(Tree::from_nodes(std::move(nodes)));
    }
  }
  auto tail = reader.next("end");
  if (token(tail) != "end") reader.fail("expected end");
  return posterior;
}

}  // namespace satclass
