#include "gx/report.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "gx/graph_io.hpp"
#include "json.hpp"

namespace gx {

using nlohmann::json;

namespace {

json scores_json(const ExplanationScores& s) {
  return {{"p", s.p},
          {"s", s.s},
          {"d", s.d},
          {"v", s.v},
          {"granularity", s.granularity},
          {"average_degree", s.average_degree},
          {"valid", s.valid}};
}

ExplanationScores scores_from(const json& j) {
  ExplanationScores s;
  s.p = j.at("p").get<double>();
  s.s = j.at("s").get<double>();
  s.d = j.at("d").get<double>();
  s.v = j.at("v").get<double>();
  s.granularity = j.at("granularity").get<double>();
  s.average_degree = j.at("average_degree").get<double>();
  s.valid = j.at("valid").get<bool>();
  return s;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::vector<double> centroid(const std::vector<GraphEval>& evals) {
  std::vector<double> m(evals.empty() ? 0 : evals[0].embedding.size(), 0.0);
  for (const auto& e : evals)
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += e.embedding[i];
  for (auto& x : m) x /= static_cast<double>(evals.size());
  return m;
}

std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string manifest_line(const HarvestRecord& rec, const ManifestContext& ctx) {
  json cands = json::array();
  for (const auto& c : rec.candidates)
    cands.push_back({{"graph", json::parse(graph_to_json_line(c.graph))},
                     {"scores", scores_json(c.scores)},
                     {"passed", c.passed},
                     {"sample", c.sample}});
  json j = {{"iteration", rec.iteration},
            {"lambda", rec.lambda},
            {"losses",
             {{"critic", rec.critic_loss},
              {"wasserstein", rec.wasserstein},
              {"penalty", rec.penalty},
              {"generator", rec.generator_loss},
              {"gan", rec.gan_loss},
              {"gnn", rec.gnn_loss}}},
            {"sampled", rec.sampled},
            {"passed", rec.passed},
            {"dataset", ctx.dataset},
            {"class", ctx.target_class},
            {"seed", ctx.seed},
            {"config_hash", ctx.config_hash},
            {"candidates", cands}};
  return j.dump();
}

void write_run_manifest(std::ostream& out, const ExplainerResult& res, const ManifestContext& ctx) {
  for (const auto& h : res.harvests) out << manifest_line(h, ctx) << '\n';
}

std::vector<ManifestEntry> read_run_manifest(std::istream& in, const std::string& source) {
  std::vector<ManifestEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      ManifestEntry e;
      e.iteration = j.at("iteration").get<int>();
      e.lambda = j.at("lambda").get<double>();
      e.sampled = j.at("sampled").get<int>();
      e.passed = j.at("passed").get<int>();
      e.ctx.dataset = j.at("dataset").get<std::string>();
      e.ctx.target_class = j.at("class").get<int>();
      e.ctx.seed = j.at("seed").get<std::uint64_t>();
      e.ctx.config_hash = j.at("config_hash").get<std::string>();
      for (const auto& c : j.at("candidates")) {
        ExplanationCandidate cand;
        cand.graph = graph_from_json_line(c.at("graph").dump(), lineno);
        cand.scores = scores_from(c.at("scores"));
        cand.passed = c.at("passed").get<bool>();
        cand.sample = c.at("sample").get<int>();
        cand.iteration = e.iteration;
        cand.seed = e.ctx.seed;
        e.candidates.push_back(std::move(cand));
      }
      out.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw ParseError(ex.what(), lineno, source);
    }
  }
  return out;
}

std::vector<ManifestEntry> load_run_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_run_manifest(in, path.string());
}

std::string to_dot(const Graph& g, const std::string& name, const std::vector<std::string>& node_names,
                   const std::vector<std::string>& edge_names) {
  static const char* palette[] = {"black", "red", "green", "blue", "orange", "purple", "brown", "gray"};
  std::ostringstream os;
  os << "graph " << dot_quote(name) << " {\n";
  for (int i = 0; i < g.node_count; ++i) {
    const int l = g.node_labels[i];
    const std::string label = l < static_cast<int>(node_names.size()) ? node_names[l] : std::to_string(l);
    os << "  " << i << " [label=" << dot_quote(label) << "];\n";
  }
  for (const auto& e : g.edges) {
    os << "  " << e.u << " -- " << e.v << " [color=" << palette[e.label % 8];
    if (e.label < static_cast<int>(edge_names.size())) os << ", label=" << dot_quote(edge_names[e.label]);
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

std::vector<TableRow> evaluation_table(const std::vector<ManifestEntry>& entries, int top_n) {
  using RunKey = std::tuple<std::string, int, std::uint64_t, std::string>;
  std::map<RunKey, std::vector<ExplanationCandidate>> runs;
  for (const auto& e : entries) {
    auto& v = runs[{e.ctx.dataset, e.ctx.target_class, e.ctx.seed, e.ctx.config_hash}];
    v.insert(v.end(), e.candidates.begin(), e.candidates.end());
  }
  std::map<std::pair<std::string, int>, TableRow> rows;
  for (auto& [key, cands] : runs) {
    auto top = select_explanations(std::move(cands), top_n);
    double m = 0;
    for (const auto& c : top) m += c.scores.v;
    if (!top.empty()) m /= static_cast<double>(top.size());
    auto& r = rows[{std::get<0>(key), std::get<1>(key)}];
    r.dataset = std::get<0>(key);
    r.target_class = std::get<1>(key);
    r.mean_v += m;
    ++r.runs;
  }
  std::vector<TableRow> out;
  for (auto& [k, r] : rows) {
    r.mean_v /= r.runs;
    out.push_back(r);
  }
  return out;
}

void write_table_csv(std::ostream& out, const std::vector<TableRow>& rows) {
  out << "dataset,class,mean_v\n";
  out << std::setprecision(6) << std::fixed;
  for (const auto& r : rows) out << r.dataset << ',' << r.target_class << ',' << r.mean_v << '\n';
  out.unsetf(std::ios::floatfield);
}

Pca fit_pca(const std::vector<std::vector<double>>& x, int k) {
  if (x.size() < 2) throw InsufficientDataError("fit_pca: need at least 2 rows");
  const int d = static_cast<int>(x[0].size());
  if (k < 1 || k > d) throw ConfigError("fit_pca: k must be in [1, dim]");
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(x[i].size()) != d) throw ShapeError("fit_pca: ragged rows");
    for (int j = 0; j < d; ++j) m(i, j) = x[i][j];
  }
  Eigen::RowVectorXd mu = m.colwise().mean();
  Eigen::MatrixXd c = m.rowwise() - mu;
  Eigen::MatrixXd cov = (c.transpose() * c) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Pca p;
  p.mean.assign(mu.data(), mu.data() + d);
  for (int r = 0; r < k; ++r) {
    const int col = d - 1 - r;  // eigenvalues come in increasing order
    Eigen::VectorXd v = es.eigenvectors().col(col);
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    if (v(big) < 0) v = -v;
    p.components.emplace_back(v.data(), v.data() + d);
    p.explained_variance.push_back(std::max(0.0, es.eigenvalues()(col)));
  }
  return p;
}

std::vector<double> project(const Pca& pca, const std::vector<double>& v) {
  if (v.size() != pca.mean.size()) throw ShapeError("project: dimension mismatch");
  std::vector<double> out;
  for (const auto& comp : pca.components) {
    double s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += (v[i] - pca.mean[i]) * comp[i];
    out.push_back(s);
  }
  return out;
}

Graph class_motif(const GraphDataset& ds, int cls) {
  for (const auto& g : ds.graphs)
    if (g.class_label == cls && !g.meta.motif_nodes.empty()) {
      Graph m = induced_subgraph(g, g.meta.motif_nodes);
      m.meta = {};
      return m;
    }
  return {};
}

EmbeddingReport embedding_report(const GnnModel& model, const GraphDataset& original, const GraphDataset& pruned) {
  if (original.graphs.size() != pruned.graphs.size())
    throw DataError("embedding_report: pruned dataset does not match the original");
  auto before = evaluate_graphs(model, original.graphs);
  auto after = evaluate_graphs(model, pruned.graphs);
  std::vector<std::vector<double>> x;
  for (const auto& e : before) x.push_back(e.embedding);

  EmbeddingReport rep;
  rep.pca = fit_pca(x, 2);
  for (std::size_t i = 0; i < before.size(); ++i)
    rep.rows.push_back({"original", static_cast<int>(i), original.graphs[i].class_label,
                        project(rep.pca, before[i].embedding)});
  for (std::size_t i = 0; i < after.size(); ++i)
    rep.rows.push_back({"pruned", static_cast<int>(i), pruned.graphs[i].class_label,
                        project(rep.pca, after[i].embedding)});

  for (int c = 0; c < original.num_classes(); ++c) {
    Graph motif = class_motif(original, c);
    if (motif.node_count == 0) continue;
    const auto emb = embed(model, motif);
    rep.rows.push_back({"motif", c, c, project(rep.pca, emb)});
    std::vector<GraphEval> b, a;
    for (std::size_t i = 0; i < before.size(); ++i)
      if (original.graphs[i].class_label == c) {
        b.push_back(before[i]);
        a.push_back(after[i]);
      }
    MotifDistance md{c, distance(emb, centroid(b)), distance(emb, centroid(a))};
    rep.motif_classes_closer += md.after < md.before;
    rep.motif_distances.push_back(md);
  }
  return rep;
}

void write_embeddings_csv(std::ostream& out, const EmbeddingReport& rep) {
  out << "set,index,class,pc1,pc2\n";
  out << std::setprecision(9);
  for (const auto& r : rep.rows)
    out << r.set << ',' << r.index << ',' << r.class_label << ',' << r.coords[0] << ',' << r.coords[1] << '\n';
}

}  // namespace gx
