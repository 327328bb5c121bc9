// Command-line front end: data preparation, training, inference, evaluation,
// gradient checks and loss-weight sweeps.

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "slt/anchors.hpp"
#include "slt/config.hpp"
#include "slt/dataset.hpp"
#include "slt/gradcheck_suite.hpp"
#include "slt/model.hpp"
#include "slt/synthetic.hpp"
#include "slt/trainer.hpp"

namespace fs = std::filesystem;
using namespace slt;

namespace {

// Registers one flag per TrainConfig field. Values given on the command line
// override the --config file, which overrides the defaults.
struct ConfigFlags {
  TrainConfig parsed;
  std::map<std::string, CLI::Option*> options;
  std::string config_path;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    visit_config_fields(parsed, [&](const char* key, auto& field) {
      options[key] = app->add_option(std::string("--") + key, field);
    });
  }

  TrainConfig resolve() {
    TrainConfig c = config_path.empty() ? TrainConfig{} : TrainConfig::load(config_path);
    visit_config_fields(c, [&](const char* key, auto& field) {
      CLI::Option* opt = options.at(key);
      if (opt->count() > 0) opt->results(field);
    });
    c.validate();
    return c;
  }
};

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::vector<std::string> corpus_texts(const std::string& manifest, const std::string& corpus) {
  if (!manifest.empty()) return DatasetManifest::load(manifest).texts();
  if (!corpus.empty()) return read_lines(corpus);
  throw ParameterError("one of --manifest or --corpus is required");
}

// Builtin lexicon plus word<TAB>tag lines from `path`, which take precedence.
Lexicon extended_lexicon(const std::string& path) {
  Lexicon lexicon = Lexicon::builtin();
  if (path.empty()) return lexicon;
  for (const auto& line : read_lines(path)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(path + ": expected word<TAB>tag: " + line);
    lexicon.add(line.substr(0, tab), line.substr(tab + 1));
  }
  return lexicon;
}

void print_report(const EvalReport& r) { std::cout << r.to_json().dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gloss-free sign language translation from pose keypoints"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;

  // prepare-anchors
  auto* anchors_cmd = app.add_subcommand("prepare-anchors", "Mine the anchor word vocabulary");
  std::string a_manifest, a_corpus, a_pretagged, a_lexicon, a_out;
  std::string a_preset = "VN";
  std::size_t a_min_count = 10;
  double a_max_frac = 0.9;
  anchors_cmd->add_option("--manifest", a_manifest, "dataset manifest");
  anchors_cmd->add_option("--corpus", a_corpus, "text file, one translation per line");
  anchors_cmd->add_option("--pretagged", a_pretagged, "pre-tagged TSV (word/TAG tokens)");
  anchors_cmd->add_option("--lexicon", a_lexicon, "word<TAB>tag lexicon added to the builtin one");
  anchors_cmd->add_option("--anchor_preset", a_preset, "V, N, VN or VNA");
  anchors_cmd->add_option("--anchor_min_count", a_min_count);
  anchors_cmd->add_option("--anchor_max_doc_fraction", a_max_frac);
  anchors_cmd->add_option("--out", a_out, "output TSV")->required();
  anchors_cmd->add_option("--seed", seed);

  // train-bpe
  auto* bpe_cmd = app.add_subcommand("train-bpe", "Train the subword vocabulary");
  std::string b_manifest, b_corpus, b_out;
  std::size_t b_vocab = 4000;
  bpe_cmd->add_option("--manifest", b_manifest);
  bpe_cmd->add_option("--corpus", b_corpus);
  bpe_cmd->add_option("--bpe_vocab_size", b_vocab);
  bpe_cmd->add_option("--out", b_out)->required();
  bpe_cmd->add_option("--seed", seed);

  // gen-synthetic
  auto* syn_cmd = app.add_subcommand("gen-synthetic", "Write a synthetic pose/translation dataset");
  SyntheticSpec spec;
  std::size_t s_count = 64;
  std::string s_out, s_format = "pseq", s_split = "train";
  syn_cmd->add_option("--count", s_count);
  syn_cmd->add_option("--concepts", spec.concepts);
  syn_cmd->add_option("--min_length", spec.min_length);
  syn_cmd->add_option("--max_length", spec.max_length);
  syn_cmd->add_option("--frames_per_concept", spec.frames_per_concept);
  syn_cmd->add_option("--noise", spec.noise);
  syn_cmd->add_option("--words_per_concept", spec.words_per_concept);
  syn_cmd->add_option("--format", s_format)->check(CLI::IsMember({"pseq", "jsonl"}));
  syn_cmd->add_option("--split", s_split);
  syn_cmd->add_option("--out", s_out)->required();
  syn_cmd->add_option("--seed", seed);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a translator");
  ConfigFlags train_flags;
  train_flags.attach(train_cmd);
  std::string t_manifest, t_out, t_bpe, t_anchors, t_embeddings, t_skeleton, t_resume, t_lexicon;
  std::size_t t_max_steps = 0, t_threads = 0;
  train_cmd->add_option("--manifest", t_manifest)->required();
  train_cmd->add_option("--out", t_out, "output directory")->required();
  train_cmd->add_option("--bpe", t_bpe, "existing BPE model (default: trained on the manifest)");
  train_cmd->add_option("--anchors", t_anchors, "existing anchor TSV (default: mined)");
  train_cmd->add_option("--lexicon", t_lexicon, "extra lexicon for anchor mining");
  train_cmd->add_option("--embeddings", t_embeddings, "GloVe-format anchor initialization");
  train_cmd->add_option("--skeleton", t_skeleton, "skeleton JSON (default: 76-keypoint layout)");
  train_cmd->add_option("--resume", t_resume, "checkpoint directory to continue from");
  train_cmd->add_option("--max_steps", t_max_steps, "stop after this many updates");
  train_cmd->add_option("--threads", t_threads, "worker threads (default: SLT_NUM_THREADS or 1)");

  // translate
  auto* tr_cmd = app.add_subcommand("translate", "Translate pose files");
  std::string tr_ckpt, tr_manifest, tr_out;
  std::vector<std::string> tr_poses;
  std::optional<std::size_t> tr_beam;
  std::size_t tr_threads = 0;
  tr_cmd->add_option("--checkpoint", tr_ckpt)->required();
  tr_cmd->add_option("--pose", tr_poses, "pose files (JSONL or PSEQ)");
  tr_cmd->add_option("--manifest", tr_manifest);
  tr_cmd->add_option("--beam_size", tr_beam);
  tr_cmd->add_option("--out", tr_out, "TSV output (default: stdout)");
  tr_cmd->add_option("--threads", tr_threads);
  tr_cmd->add_option("--seed", seed);

  // evaluate
  auto* ev_cmd = app.add_subcommand("evaluate", "Translate a manifest and score it");
  std::string ev_ckpt, ev_manifest, ev_out;
  std::optional<std::size_t> ev_beam;
  std::size_t ev_threads = 0;
  ev_cmd->add_option("--checkpoint", ev_ckpt)->required();
  ev_cmd->add_option("--manifest", ev_manifest)->required();
  ev_cmd->add_option("--beam_size", ev_beam);
  ev_cmd->add_option("--out", ev_out, "directory for report.json and hypotheses.tsv");
  ev_cmd->add_option("--threads", ev_threads);
  ev_cmd->add_option("--seed", seed);

  // gradcheck
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  std::string gc_filter;
  gc_cmd->add_option("--filter", gc_filter, "only cases whose name contains this");
  gc_cmd->add_option("--seed", seed);

  // sweep
  auto* sw_cmd = app.add_subcommand("sweep", "Train over a grid of loss weights and margins");
  ConfigFlags sweep_flags;
  sweep_flags.attach(sw_cmd);
  std::string sw_manifest, sw_out, sw_embeddings;
  std::vector<double> sw_lambdas{0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<double> sw_margins;
  sw_cmd->add_option("--manifest", sw_manifest)->required();
  sw_cmd->add_option("--out", sw_out)->required();
  sw_cmd->add_option("--lambdas", sw_lambdas)->delimiter(',');
  sw_cmd->add_option("--margins", sw_margins)->delimiter(',');
  sw_cmd->add_option("--embeddings", sw_embeddings);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*anchors_cmd) {
      std::vector<TaggedSentence> corpus;
      if (!a_pretagged.empty()) {
        std::ifstream in(a_pretagged);
        if (!in) throw LoadError("cannot open " + a_pretagged);
        corpus = read_pretagged(in);
      } else {
        corpus = tag_corpus(corpus_texts(a_manifest, a_corpus), extended_lexicon(a_lexicon));
      }
      AnchorVocab vocab = select_anchors(corpus, preset_tags(parse_word_type_preset(a_preset)),
                                         a_min_count, a_max_frac);
      vocab.save_tsv(a_out);
      std::cout << vocab.size() << " anchors (" << a_preset << ") -> " << a_out << '\n';
    } else if (*bpe_cmd) {
      BpeModel bpe = BpeModel::train(corpus_texts(b_manifest, b_corpus), b_vocab);
      bpe.save(b_out);
      std::cout << "vocabulary " << bpe.vocab_size() << " (" << bpe.merges().size()
                << " merges) -> " << b_out << '\n';
    } else if (*syn_cmd) {
      DatasetManifest m =
          generate_synthetic(spec, s_count, seed, s_out,
                             s_format == "jsonl" ? PoseFormat::Jsonl : PoseFormat::Packed, s_split);
      std::cout << m.samples.size() << " samples -> " << (fs::path(s_out) / "manifest.json")
                << '\n';
    } else if (*train_cmd) {
      TrainConfig config = train_flags.resolve();
      std::vector<Sample> samples = load_dataset(DatasetManifest::load(t_manifest), config.frame_cap);
      std::unique_ptr<SignTranslator> model;
      if (!t_resume.empty()) {
        LoadedCheckpoint ckpt = load_checkpoint(t_resume);
        model = std::move(ckpt.model);
      } else {
        std::vector<std::string> texts;
        for (const Sample& s : samples) texts.push_back(s.text);
        BpeModel bpe = t_bpe.empty() ? build_bpe(config, texts) : BpeModel::load(t_bpe);
        AnchorVocab anchors;
        if (!t_anchors.empty()) {
          anchors = AnchorVocab::load_tsv(t_anchors);
        } else {
          anchors = build_anchors(config, texts, extended_lexicon(t_lexicon));
        }
        std::optional<fs::path> emb;
        if (!t_embeddings.empty()) emb = t_embeddings;
        EmbeddingInit init = load_pretrained_embeddings(emb, anchors, config.d_ca, config.seed);
        SkeletonSpec skeleton =
            t_skeleton.empty() ? SkeletonSpec::default_spec() : SkeletonSpec::load(t_skeleton);
        model = std::make_unique<SignTranslator>(config, std::move(bpe), std::move(anchors),
                                                 std::move(skeleton), init);
      }
      std::cerr << "parameters " << model->params().total_numel() << ", vocabulary "
                << model->bpe().vocab_size() << ", anchors " << model->anchors().size()
                << ", samples " << samples.size() << '\n';
      TrainOptions options;
      options.out_dir = t_out;
      if (!t_resume.empty()) options.resume_from = fs::path(t_resume);
      options.max_steps = t_max_steps;
      options.threads = t_threads;
      options.log = &std::cerr;
      TrainResult r = train(*model, samples, options);
      std::cout << "trained " << r.step << " steps (" << r.epoch << " epochs) -> "
                << (fs::path(t_out) / "checkpoint") << '\n';
    } else if (*tr_cmd) {
      LoadedCheckpoint ckpt = load_checkpoint(tr_ckpt);
      const std::size_t beam = tr_beam.value_or(ckpt.model->config().beam_size);
      std::vector<Sample> samples;
      if (!tr_manifest.empty()) {
        samples = load_dataset(DatasetManifest::load(tr_manifest), ckpt.model->config().frame_cap);
      }
      for (const std::string& p : tr_poses) {
        const std::string id = fs::path(p).stem().string();
        samples.push_back({id, apply_frame_cap(load_pose(p, id), ckpt.model->config().frame_cap), ""});
      }
      if (samples.empty()) throw ParameterError("no input: pass --pose or --manifest");
      std::vector<Translation> out = translate_all(*ckpt.model, samples, beam, tr_threads);
      std::ofstream file;
      if (!tr_out.empty()) file.open(tr_out);
      std::ostream& os = tr_out.empty() ? std::cout : file;
      for (const Translation& t : out) os << t.id << '\t' << t.hypothesis << '\n';
    } else if (*ev_cmd) {
      LoadedCheckpoint ckpt = load_checkpoint(ev_ckpt);
      const std::size_t beam = ev_beam.value_or(ckpt.model->config().beam_size);
      std::vector<Sample> samples =
          load_dataset(DatasetManifest::load(ev_manifest), ckpt.model->config().frame_cap);
      Evaluation eval = evaluate(*ckpt.model, samples, beam, ev_threads);
      if (!ev_out.empty()) write_evaluation(eval, samples, ev_out);
      print_report(eval.report);
    } else if (*gc_cmd) {
      std::size_t failed = 0;
      for (const GradCheckCase& c : gradient_suite()) {
        if (!gc_filter.empty() && c.name.find(gc_filter) == std::string::npos) continue;
        GradCheckResult r = c.run(seed);
        const double tol = c.composite ? 1e-4 : 1e-5;
        const bool ok = r.max_rel_error < tol;
        failed += !ok;
        std::cout << (ok ? "ok   " : "FAIL ") << std::left << std::setw(32) << c.name
                  << " max_rel_error " << std::scientific << std::setprecision(3)
                  << r.max_rel_error << " (" << r.coords_checked << " coords)"
                  << std::defaultfloat << '\n';
      }
      return failed == 0 ? 0 : 1;
    } else if (*sw_cmd) {
      TrainConfig config = sweep_flags.resolve();
      std::vector<Sample> samples =
          load_dataset(DatasetManifest::load(sw_manifest), config.frame_cap);
      if (sw_margins.empty()) sw_margins = {config.margin};
      std::optional<fs::path> emb;
      if (!sw_embeddings.empty()) emb = sw_embeddings;
      for (const SweepRun& r : sweep(config, samples, sw_lambdas, sw_margins, sw_out, emb, &std::cerr)) {
        std::cout << "lambda " << r.lambda << " margin " << r.margin << " l_ce " << r.final_l_ce
                  << " l_itl " << r.initial_l_itl << " -> " << r.final_l_itl << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
