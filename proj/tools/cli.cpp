// Copyright 2026 The mky Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mky/accel_sim.hpp"
#include "mky/error.hpp"
#include "mky/golden_dict.hpp"
#include "mky/index_engine.hpp"
#include "mky/packer.hpp"
#include "mky/quantizer.hpp"
#include "mky/reference_mac.hpp"
#include "mky/sidecar.hpp"
#include "mky/tensor.hpp"

namespace mky::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// The dictionary sidecar always sits next to the packed codes.
fs::path sidecar_path(const fs::path& packed) {
  fs::path p = packed;
  return p.replace_extension(".json");
}

QuantizedTensor load_quantized(const fs::path& packed) {
  const PackedTensor p = load_packed(packed);
  const Sidecar sc = load_sidecar(sidecar_path(packed));
  QuantizedTensor q = unpack(p, sc.dict, sc.shape);
  if (!(q.aux == sc.aux)) throw Error(ErrorCode::kMalformed, "sidecar aux sums disagree with " + packed.string());
  return q;
}

void store_quantized(const QuantizedTensor& q, const fs::path& out, std::uint32_t group_size) {
  save_packed(pack(q, group_size), out);
  save_sidecar(make_sidecar(q), sidecar_path(out));
}

std::string real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct Options {
  std::uint64_t seed = 0;
  std::size_t samples = 50'000;
  std::size_t repeats = 10;
  std::size_t clusters = 16;
  int counter_bits = 8;
  int gpes = 8;
  int tiles = 1;
  int postproc = 1;
  std::uint32_t group_size = kDefaultGroupSize;
  std::string out;
  std::string input;
  std::string golden;
  std::string dict;
  std::string second;
  std::vector<std::string> profile;
  std::string terms;
  bool json_lines = false;
};

int cmd_gen_golden(const Options& o, std::ostream& out) {
  GoldenOptions g;
  g.seed = o.seed;
  g.samples = o.samples;
  g.repeats = o.repeats;
  g.clusters = o.clusters;
  const auto t0 = std::chrono::steady_clock::now();
  const GoldenDictionary gd = generate_golden_dictionary(g);
  const ExpFit fit = fit_exponential(gd);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_golden(gd, fit, o.out);
  out << "a=" << real(fit.a) << " b=" << real(fit.b) << " residual=" << real(fit.residual) << " seconds=" << secs
      << " -> " << o.out << '\n';
  return 0;
}

int cmd_quantize(const Options& o, std::ostream& out) {
  const GoldenFile golden = load_golden(o.golden);
  const Tensor t = load_tensor(o.input);
  TensorDictionary dict;
  if (o.profile.empty()) {
    dict = build_tensor_dictionary(compute_stats(t), golden.fit, t);
  } else {
    std::vector<Tensor> samples;
    for (const auto& p : o.profile) samples.push_back(load_tensor(p));
    dict = profile_activations(samples, golden.fit);
  }
  const QuantizedTensor q = encode_tensor(t, std::make_shared<const TensorDictionary>(std::move(dict)));
  store_quantized(q, o.out, o.group_size);
  out << "elements=" << q.size() << " outliers=" << q.outlier_count() << " frac=" << q.dict->fmt().frac << " -> "
      << o.out << " + " << sidecar_path(o.out).string() << '\n';
  return 0;
}

int cmd_pack(const Options& o, std::ostream& out) {
  const Sidecar sc = load_sidecar(o.dict);
  const Tensor t = load_tensor(o.input);
  if (t.shape() != sc.shape) {
    throw Error(ErrorCode::kShapeMismatch,
                "tensor " + shape_string(t.shape()) + " vs dictionary " + shape_string(sc.shape));
  }
  const QuantizedTensor q = encode_tensor(t, sc.dict);
  store_quantized(q, o.out, o.group_size);
  out << "elements=" << q.size() << " outliers=" << q.outlier_count() << " -> " << o.out << '\n';
  return 0;
}

int cmd_unpack(const Options& o, std::ostream& out) {
  const QuantizedTensor q = load_quantized(o.input);
  const Tensor t = decode_tensor(q);
  save_tensor(t, o.out);
  out << "elements=" << t.size() << " frac=" << t.frac() << " -> " << o.out << '\n';
  return 0;
}

json terms_json(const DotTerms& t) {
  return json{{"soi", to_decimal(t.soi)},       {"soa1", to_decimal(t.soa1)}, {"soa2", to_decimal(t.soa2)},
              {"sow1", to_decimal(t.sow1)},     {"sow2", to_decimal(t.sow2)}, {"pom1", to_decimal(t.pom1)},
              {"pom2", to_decimal(t.pom2)},     {"pom3", to_decimal(t.pom3)}, {"pom4", to_decimal(t.pom4)},
              {"outlier", to_decimal(t.outlier)}};
}

int cmd_matmul(const Options& o, std::ostream& out) {
  const QuantizedTensor a = load_quantized(o.input);
  const QuantizedTensor w = load_quantized(o.second);
  const GemmResult g = gemm(a, w);
  save_tensor(g.output, o.out);
  if (!o.terms.empty()) {
    // One JSON line per output element with its exact term breakdown.
    std::ofstream f(o.terms);
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + o.terms);
    const MatrixDims da = activation_dims(a.shape);
    const MatrixDims dw = weight_dims(w.shape);
    const std::size_t k = da.cols;
    std::vector<Code> col(k);
    for (std::size_t j = 0; j < dw.cols; ++j) {
      for (std::size_t p = 0; p < k; ++p) col[p] = w.codes[p * dw.cols + j];
      for (std::size_t i = 0; i < da.rows; ++i) {
        const DotResult r =
            dot(std::span<const Code>(a.codes.data() + i * k, k), col, *a.dict, *w.dict, g.fmt);
        f << json{{"row", i}, {"col", j}, {"raw", r.value}, {"product_frac", r.product_frac},
                  {"terms", terms_json(r.terms)}}
                 .dump()
          << '\n';
      }
    }
  }
  out << "output=" << shape_string(g.output.shape()) << " frac=" << g.fmt.frac << " saturated=" << g.saturated
      << " -> " << o.out << '\n';
  return 0;
}

int cmd_verify(const Options& o, std::ostream& out) {
  const QuantizedTensor a = load_quantized(o.input);
  const QuantizedTensor w = load_quantized(o.second);
  const GemmResult engine = gemm(a, w);
  const GemmResult oracle = reference_gemm(a, w, engine.fmt);
  const VerifyReport rep = compare_gemm(engine, oracle);
  const bool pass = rep.pass();
  if (o.json_lines) {
    out << json{{"pass", pass},
                {"outputs", rep.outputs},
                {"mismatches", rep.mismatches},
                {"max_raw_discrepancy", rep.max_raw_discrepancy},
                {"max_exact_discrepancy", to_decimal(rep.max_exact_discrepancy)}}
               .dump()
        << '\n';
  } else {
    out << (pass ? "PASS" : "FAIL") << " outputs=" << rep.outputs << " mismatches=" << rep.mismatches
        << " max_discrepancy=" << rep.max_raw_discrepancy
        << " max_exact_discrepancy=" << to_decimal(rep.max_exact_discrepancy) << '\n';
  }
  return pass ? 0 : 1;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  const QuantizedTensor a = load_quantized(o.input);
  const QuantizedTensor w = load_quantized(o.second);
  TileConfig cfg;
  cfg.gpe_count = o.gpes;
  cfg.counter_bits = o.counter_bits;
  cfg.postproc_cycles_per_entry = o.postproc;
  const LayerResult lr = simulate_layer(a, w, cfg, o.tiles, std::nullopt, o.group_size);
  const std::string csv = csv_header() + '\n' + csv_row(lr.stats) + '\n';
  if (o.out.empty()) {
    out << csv;
  } else {
    std::ofstream f(o.out);
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + o.out);
    f << csv;
    out << report_text(lr.stats);
  }
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const Tensor original = load_tensor(o.input);
  const QuantizedTensor q = load_quantized(o.second);
  if (original.shape() != q.shape) {
    throw Error(ErrorCode::kShapeMismatch,
                "original " + shape_string(original.shape()) + " vs quantized " + shape_string(q.shape));
  }
  const Tensor decoded = decode_tensor(q);
  double sq = 0.0;
  double max_abs = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    const double e = decoded.value(i) - original.value(i);
    sq += e * e;
    max_abs = std::max(max_abs, std::abs(e));
  }
  const double rmse = std::sqrt(sq / static_cast<double>(original.size()));
  const PackedSize size = measure(pack(q, o.group_size));
  if (o.json_lines) {
    out << json{{"rmse", rmse},
                {"max_abs_error", max_abs},
                {"outlier_fraction", q.outlier_fraction()},
                {"bits_per_value", size.bits_per_value}}
               .dump()
        << '\n';
  } else {
    out << "rmse=" << real(rmse) << " max_abs_error=" << real(max_abs) << " outlier_fraction="
        << real(q.outlier_fraction()) << " bits_per_value=" << real(size.bits_per_value) << '\n';
  }
  return 0;
}

}  // namespace

VerifyReport compare_gemm(const GemmResult& engine, const GemmResult& oracle) {
  const auto er = engine.output.raw();
  const auto orr = oracle.output.raw();
  if (er.size() != orr.size() || engine.exact.size() != oracle.exact.size() || er.size() != engine.exact.size()) {
    throw Error(ErrorCode::kShapeMismatch, "engine and oracle outputs differ in size");
  }
  VerifyReport rep;
  rep.outputs = er.size();
  for (std::size_t i = 0; i < er.size(); ++i) {
    const std::int64_t d = std::abs(static_cast<std::int64_t>(er[i]) - orr[i]);
    Int256 de = engine.exact[i] - oracle.exact[i];
    if (de < 0) de = -de;
    if (d != 0 || de != 0) ++rep.mismatches;
    rep.max_raw_discrepancy = std::max(rep.max_raw_discrepancy, d);
    if (de > rep.max_exact_discrepancy) rep.max_exact_discrepancy = de;
  }
  return rep;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mky: golden-dictionary 4-bit quantization, index-domain GEMM and tile simulation", "mky"};
  app.require_subcommand(1);
  Options o;
  int (*handler)(const Options&, std::ostream&) = nullptr;

  auto* gen = app.add_subcommand("gen-golden", "Cluster N(0,1) samples into the golden dictionary and fit a^k+b");
  gen->add_option("--seed", o.seed, "Random seed");
  gen->add_option("--samples", o.samples, "Gaussian samples per repeat")->check(CLI::Range(std::size_t{32}, std::size_t{100'000'000}));
  gen->add_option("--repeats", o.repeats, "Independent draws averaged")->check(CLI::Range(std::size_t{1}, std::size_t{1000}));
  gen->add_option("--clusters", o.clusters, "Cluster count (even)")->check(CLI::Range(std::size_t{2}, std::size_t{64}));
  gen->add_option("--out", o.out, "Golden dictionary JSON")->required();
  gen->callback([&] { handler = cmd_gen_golden; });

  auto* quant = app.add_subcommand("quantize", "Encode a tensor; writes packed codes and a .json dictionary sidecar");
  quant->add_option("tensor", o.input, "Input MKYT tensor")->required()->check(CLI::ExistingFile);
  quant->add_option("--golden", o.golden, "Golden dictionary JSON")->required()->check(CLI::ExistingFile);
  quant->add_option("--profile", o.profile, "Activation samples to fit the dictionary on")->check(CLI::ExistingFile);
  quant->add_option("--group-size", o.group_size, "Outlier group size")->check(CLI::Range(1, 64));
  quant->add_option("--out", o.out, "Packed output (.mkyp)")->required();
  quant->callback([&] { handler = cmd_quantize; });

  auto* pk = app.add_subcommand("pack", "Encode a tensor with an existing dictionary sidecar");
  pk->add_option("tensor", o.input, "Input MKYT tensor")->required()->check(CLI::ExistingFile);
  pk->add_option("--dict", o.dict, "Dictionary sidecar JSON")->required()->check(CLI::ExistingFile);
  pk->add_option("--group-size", o.group_size, "Outlier group size")->check(CLI::Range(1, 64));
  pk->add_option("--out", o.out, "Packed output (.mkyp)")->required();
  pk->callback([&] { handler = cmd_pack; });

  auto* upk = app.add_subcommand("unpack", "Decode packed codes into an fx16 MKYT tensor");
  upk->add_option("packed", o.input, "Packed input (.mkyp, sidecar alongside)")->required()->check(CLI::ExistingFile);
  upk->add_option("--out", o.out, "Output MKYT tensor")->required();
  upk->callback([&] { handler = cmd_unpack; });

  auto* mm = app.add_subcommand("matmul", "Index-domain GEMM of two packed operands");
  mm->add_option("activations", o.input, "Packed A [M,K]")->required()->check(CLI::ExistingFile);
  mm->add_option("weights", o.second, "Packed W [K,N]")->required()->check(CLI::ExistingFile);
  mm->add_option("--terms", o.terms, "Write the per-output term breakdown as JSON lines");
  mm->add_option("--out", o.out, "Output fx16 MKYT tensor")->required();
  mm->callback([&] { handler = cmd_matmul; });

  auto* ver = app.add_subcommand("verify", "Compare the index engine against the centroid MAC oracle");
  ver->add_option("activations", o.input, "Packed A [M,K]")->required()->check(CLI::ExistingFile);
  ver->add_option("weights", o.second, "Packed W [K,N]")->required()->check(CLI::ExistingFile);
  ver->add_flag("--json", o.json_lines, "Emit one JSON line");
  ver->callback([&] { handler = cmd_verify; });

  auto* sim = app.add_subcommand("simulate", "Cycle-approximate tile simulation; CSV statistics");
  sim->add_option("activations", o.input, "Packed A [M,K]")->required()->check(CLI::ExistingFile);
  sim->add_option("weights", o.second, "Packed W [K,N]")->required()->check(CLI::ExistingFile);
  sim->add_option("--gpes", o.gpes, "GPEs per tile")->check(CLI::Range(1, 8));
  sim->add_option("--counter-bits", o.counter_bits, "Counter width per GPE")->check(CLI::Range(2, 32));
  sim->add_option("--tiles", o.tiles, "Tiles sharing the layer")->check(CLI::Range(1, 1 << 16));
  sim->add_option("--postproc-cycles", o.postproc, "Cycles per counter entry in post-processing")
      ->check(CLI::Range(0, 1 << 16));
  sim->add_option("--group-size", o.group_size, "Outlier group size for traffic accounting")->check(CLI::Range(1, 64));
  sim->add_option("--out", o.out, "CSV output (stdout when omitted)");
  sim->callback([&] { handler = cmd_simulate; });

  auto* ev = app.add_subcommand("eval", "Error report of a quantized tensor against its original");
  ev->add_option("original", o.input, "Original MKYT tensor")->required()->check(CLI::ExistingFile);
  ev->add_option("quantized", o.second, "Packed codes (.mkyp)")->required()->check(CLI::ExistingFile);
  ev->add_option("--group-size", o.group_size, "Outlier group size")->check(CLI::Range(1, 64));
  ev->add_flag("--json", o.json_lines, "Emit one JSON line");
  ev->callback([&] { handler = cmd_eval; });

  if (args.empty()) {
    out << app.help();
    return 1;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  try {
    return handler(o, out);
  } catch (const Error& e) {
    err << "mky: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "mky: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace mky::cli
