#include "core/serialize.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace trifocal {

Json complex_to_json(cplx z) { return Json::array({z.real(), z.imag()}); }

cplx complex_from_json(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw Error(ErrorCode::kParse, "expected a [re, im] pair, got " + j.dump());
  return {j[0].get<double>(), j[1].get<double>()};
}

namespace {

template <typename Range>
Json vector_to_json(const Range& v) {
  Json a = Json::array();
  for (const auto& z : v) a.push_back(complex_to_json(z));
  return a;
}

std::vector<cplx> vector_from_json(const Json& j, size_t expected, const char* what) {
  if (!j.is_array() || (expected && j.size() != expected))
    throw Error(ErrorCode::kParse, std::string(what) + ": expected " + std::to_string(expected) + " complex entries");
  std::vector<cplx> v;
  v.reserve(j.size());
  for (const auto& x : j) v.push_back(complex_from_json(x));
  return v;
}

template <size_t N>
std::array<cplx, N> array_from_json(const Json& j, const char* what) {
  const auto v = vector_from_json(j, N, what);
  std::array<cplx, N> a;
  std::copy(v.begin(), v.end(), a.begin());
  return a;
}

Json matrix_to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) rows.push_back(vector_to_json(m.row(r)));
  return rows;
}

CMatrix matrix_from_json(const Json& j, int rows, int cols, const char* what) {
  if (!j.is_array() || (rows > 0 && static_cast<int>(j.size()) != rows))
    throw Error(ErrorCode::kParse, std::string(what) + ": wrong number of rows");
  const int r = static_cast<int>(j.size());
  std::vector<cplx> entries;
  for (const auto& row : j) {
    const auto v = vector_from_json(row, static_cast<size_t>(cols), what);
    entries.insert(entries.end(), v.begin(), v.end());
  }
  return CMatrix(r, cols, std::move(entries));
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::kParse, std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

Json instance_to_json(const InstanceFile& f) {
  Json corr = Json::array();
  for (const auto& c : f.correspondences) {
    Json vectors = Json::array();
    for (const auto& v : c.v) vectors.push_back(vector_to_json(v));
    corr.push_back({{"kind", std::string(kind_name(c.kind))}, {"vectors", vectors}});
  }
  return {{"problem", f.problem.w}, {"seed", f.seed}, {"correspondences", corr}};
}

InstanceFile instance_from_json(const Json& j) {
  InstanceFile f;
  try {
    f.problem.w = field(j, "problem").get<std::array<int, 5>>();
    if (j.contains("seed")) f.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("instance: ") + e.what());
  }
  size_t index = 0;
  for (const auto& c : field(j, "correspondences")) {
    const std::string where = "correspondences[" + std::to_string(index++) + "]";
    if (!field(c, "kind").is_string()) throw Error(ErrorCode::kParse, where + ".kind must be a string");
    const Kind k = kind_from_name(c.at("kind").get<std::string>());
    const Json& vs = field(c, "vectors");
    if (!vs.is_array() || vs.size() != 3) throw Error(ErrorCode::kParse, where + ".vectors needs three vectors");
    std::array<Vec3, 3> v;
    for (int i = 0; i < 3; ++i) v[i] = array_from_json<3>(vs[i], where.c_str());
    try {
      f.correspondences.emplace_back(k, v[0], v[1], v[2]);
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, where + ": " + e.what());
    }
  }
  if (instance_weights(f.correspondences) != f.problem)
    throw Error(ErrorCode::kParse, "instance correspondences do not match problem " + f.problem.label());
  return f;
}

std::string witness_content_hash(const PseudoWitnessSet& pws) {
  const auto* tp = dynamic_cast<const TrifocalParametrization*>(pws.param.get());
  if (!tp) throw Error(ErrorCode::kInvalidArgument, "only trifocal witness sets are serializable");
  const Json key = {{"locus", std::string(locus_name(tp->locus()))},
                    {"alpha", vector_to_json(tp->patches().alpha)},
                    {"beta", vector_to_json(tp->patches().beta)},
                    {"slice", matrix_to_json(pws.slice)}};
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : key.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

Json witness_to_json(const PseudoWitnessSet& pws, const Json& options) {
  const auto* tp = dynamic_cast<const TrifocalParametrization*>(pws.param.get());
  if (!tp) throw Error(ErrorCode::kInvalidArgument, "only trifocal witness sets are serializable");
  Json points = Json::array();
  for (const auto& p : pws.points) points.push_back(vector_to_json(p));
  Json meta = {{"degree", pws.points.size()},
               {"build_seed", pws.seed},
               {"trace_deviation", pws.trace_deviation},
               {"paths_tracked", pws.paths_tracked},
               {"content_hash", witness_content_hash(pws)},
               {"options", options}};
  return {{"locus", std::string(locus_name(tp->locus()))},
          {"patches", {{"alpha", vector_to_json(tp->patches().alpha)}, {"beta", vector_to_json(tp->patches().beta)}}},
          {"slice_rows", matrix_to_json(pws.slice)},
          {"chart", vector_to_json(pws.chart)},
          {"direction", vector_to_json(pws.direction)},
          {"points", points},
          {"certified", pws.certified},
          {"meta", meta}};
}

PseudoWitnessSet witness_from_json(const Json& j) {
  PseudoWitnessSet pws;
  try {
    const Locus locus = locus_from_name(field(j, "locus").get<std::string>());
    PatchPair patches;
    patches.alpha = array_from_json<4>(field(field(j, "patches"), "alpha"), "patches.alpha");
    patches.beta = array_from_json<4>(field(field(j, "patches"), "beta"), "patches.beta");
    auto param = std::make_shared<TrifocalParametrization>(patches, locus);
    pws.param = param;
    pws.slice = matrix_from_json(field(j, "slice_rows"), param->slice_rows(), 27, "slice_rows");
    pws.chart = vector_from_json(field(j, "chart"), 27, "chart");
    pws.direction = vector_from_json(field(j, "direction"), static_cast<size_t>(param->slice_rows()), "direction");
    size_t index = 0;
    for (const auto& p : field(j, "points")) {
      const std::string where = "points[" + std::to_string(index++) + "]";
      pws.points.push_back(vector_from_json(p, 13, where.c_str()));
    }
    pws.certified = field(j, "certified").get<bool>();
    if (j.contains("meta")) {
      const Json& m = j.at("meta");
      if (m.contains("build_seed")) pws.seed = m.at("build_seed").get<std::uint64_t>();
      if (m.contains("trace_deviation") && m.at("trace_deviation").is_number())
        pws.trace_deviation = m.at("trace_deviation").get<double>();
      if (m.contains("paths_tracked")) pws.paths_tracked = m.at("paths_tracked").get<size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("witness: ") + e.what());
  }
  if (j.contains("meta") && j.at("meta").contains("content_hash") &&
      j.at("meta").at("content_hash") != witness_content_hash(pws))
    throw Error(ErrorCode::kParse, "witness: content hash does not match the patches and slice");
  return pws;
}

StoredSolution stored_from_record(const SolutionRecord& rec) {
  StoredSolution s;
  s.params = rec.params;
  s.cameras = rec.cameras;
  s.tensor = rec.tensor;
  s.is_real = rec.is_real;
  s.membership_residual = rec.membership_residual;
  s.worst_multiview = rec.worst_multiview;
  return s;
}

Json solutions_to_json(const SolutionFile& f) {
  Json sols = Json::array();
  for (const auto& s : f.solutions) {
    Json cams = Json::array();
    for (const auto& c : s.cameras) cams.push_back(matrix_to_json(c.matrix()));
    Json rec = {{"camera_matrices", cams},
                {"is_real", s.is_real},
                {"residuals", {{"membership", s.membership_residual}, {"multiview", s.worst_multiview}}}};
    if (s.params) rec["params"] = vector_to_json(*s.params);
    if (s.tensor) rec["tensor"] = vector_to_json(s.tensor->entries());
    sols.push_back(rec);
  }
  Json counts = Json::object();
  for (int i = 0; i < kStageCount; ++i) counts[std::string(stage_name(static_cast<Stage>(i)))] = f.stage_counts[i];
  return {{"instance", instance_to_json(f.instance)},
          {"stage_counts", counts},
          {"paths", f.paths},
          {"failed_paths", f.failed_paths},
          {"solutions", sols},
          {"meta", f.meta}};
}

SolutionFile solutions_from_json(const Json& j) {
  SolutionFile f;
  f.instance = instance_from_json(field(j, "instance"));
  try {
    if (j.contains("stage_counts"))
      for (int i = 0; i < kStageCount; ++i) {
        const std::string key(stage_name(static_cast<Stage>(i)));
        if (j.at("stage_counts").contains(key)) f.stage_counts[i] = j.at("stage_counts").at(key).get<size_t>();
      }
    if (j.contains("paths")) f.paths = j.at("paths").get<size_t>();
    if (j.contains("failed_paths")) f.failed_paths = j.at("failed_paths").get<size_t>();
    if (j.contains("meta")) f.meta = j.at("meta");
    size_t index = 0;
    for (const auto& r : field(j, "solutions")) {
      const std::string where = "solutions[" + std::to_string(index++) + "]";
      StoredSolution s;
      if (r.contains("params")) s.params = array_from_json<13>(r.at("params"), where.c_str());
      if (r.contains("camera_matrices")) {
        const Json& cams = r.at("camera_matrices");
        if (!cams.is_array() || cams.size() != 3) throw Error(ErrorCode::kParse, where + ": needs three cameras");
        for (int c = 0; c < 3; ++c) s.cameras[c] = Camera(matrix_from_json(cams[c], 3, 4, where.c_str()));
      } else if (s.params) {
        const auto cfg = CalibratedConfiguration::from_params(*s.params);
        s.cameras = {cfg.camera_a(), cfg.camera_b(), cfg.camera_c()};
      } else {
        throw Error(ErrorCode::kParse, where + ": needs params or camera_matrices");
      }
      if (r.contains("tensor")) s.tensor = TrifocalTensor(array_from_json<27>(r.at("tensor"), where.c_str()));
      if (r.contains("is_real")) s.is_real = r.at("is_real").get<bool>();
      if (r.contains("residuals")) {
        const Json& res = r.at("residuals");
        if (res.contains("membership")) s.membership_residual = res.at("membership").get<double>();
        if (res.contains("multiview")) s.worst_multiview = res.at("multiview").get<double>();
      }
      f.solutions.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("solutions: ") + e.what());
  }
  return f;
}

std::string table_header() {
  return "#PPP\t#PPL\t#PLP\t#LLL\t#PLL\t#configurations\texpected\tmatch\tseed\tfinite\tmembership\tphysical\t"
         "centers\tmultiview\tepipoles\tdistinct";
}

std::string table_row(const ProblemRun& run) {
  std::ostringstream os;
  for (int x : run.weights.w) os << x << '\t';
  os << run.degree << '\t' << (run.expected ? std::to_string(*run.expected) : "-") << '\t'
     << (run.expected && *run.expected == run.degree ? "yes" : "no") << '\t' << run.seed;
  for (size_t c : run.result.report.counts) os << '\t' << c;
  return os.str();
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << j.dump(1) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

}  // namespace trifocal
