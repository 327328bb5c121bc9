#include "slt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "slt/errors.hpp"
#include "slt/ops.hpp"
#include "slt/rng.hpp"

namespace slt {

namespace fs = std::filesystem;

nlohmann::json StepTelemetry::to_json() const {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["epoch"] = epoch;
  j["lr"] = lr;
  j["loss"] = loss;
  j["l_ce"] = l_ce;
  j["l_itl"] = l_itl;
  j["triplets"] = triplets;
  j["skipped"] = skipped;
  j["anchors"] = anchors;
  j["grad_norm"] = grad_norm;
  j["pos_sim"] = pos_sim;
  j["neg_sim"] = neg_sim;
  return j;
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SLT_NUM_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n > 0) return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
    }
    throw ParameterError(std::string("SLT_NUM_THREADS must be a positive integer, got '") + env +
                         "'");
  }
  return 1;
}

namespace {

// Runs fn(i) for i < n on up to `threads` workers; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct PreparedSample {
  const Sample* sample;
  std::vector<std::size_t> ids;
};

struct StepResult {
  Tensor loss;
  Tensor l_ce;
  Tensor l_itl;  // undefined when concept mining is off or has no anchors
  StepTelemetry telemetry;
};

// Builds the full objective for one batch. Dropout streams are keyed on
// (seed, step, position in batch) and triplets on (seed, step), so results
// do not depend on the worker count.
StepResult batch_objective(const SignTranslator& model, const std::vector<PreparedSample>& batch,
                           std::size_t step, bool train, std::size_t threads) {
  const TrainConfig& config = model.config();
  const std::size_t n = batch.size();
  std::vector<EncodedFeatures> encoded(n);
  std::vector<Tensor> ce(n);
  std::size_t total_tokens = 0;
  for (const auto& p : batch) total_tokens += p.ids.size() - 1;

  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng = derive_rng(config.seed, {hash_str("dropout"), step, i});
    ForwardContext ctx{train, &rng, train ? config.dropout : 0.0};
    encoded[i] = model.encode(batch[i].sample->pose, ctx, config.e2e);
    DecoderOutput dec = model.seq2sign().decode(model.params(), encoded[i], batch[i].ids, ctx);
    Tensor loss = translation_loss(dec.logits, batch[i].ids, kPadId);
    const double weight =
        static_cast<double>(batch[i].ids.size() - 1) / static_cast<double>(total_tokens);
    ce[i] = scale(loss, weight);
  });

  StepResult out;
  out.l_ce = ce[0];
  for (std::size_t i = 1; i < n; ++i) out.l_ce = add(out.l_ce, ce[i]);
  out.loss = out.l_ce;
  out.telemetry.l_ce = out.l_ce.item();

  const ConceptMiner* miner = model.concept_miner();
  if (config.ccm && miner) {
    std::vector<std::string> texts;
    texts.reserve(n);
    for (const auto& p : batch) texts.push_back(p.sample->text);
    BatchAnchorSet anchors = collect_batch_anchors(texts, model.anchors());
    out.telemetry.anchors = anchors.size();
    Tensor l_itl = Tensor::zeros({1});
    if (anchors.size() > 0) {
      Rng rng = derive_rng(config.seed, {hash_str("triplets"), step});
      TripletDraw draw = sample_triplets(anchors, rng);
      out.telemetry.triplets = draw.triplets.size();
      out.telemetry.skipped = draw.skipped;
      Tensor h = miner->anchor_query(model.params(), anchors, encoded);
      Tensor q = ConceptMiner::batch_queries(model.params(), anchors);
      l_itl = triplet_loss(h, draw.triplets, q, config.margin, config.hinge_over_mean);
      if (!draw.triplets.empty()) {
        double pos = 0.0, neg = 0.0;
        for (const auto& s : triplet_similarities(h, draw.triplets, q)) {
          pos += s.positive;
          neg += s.negative;
        }
        out.telemetry.pos_sim = pos / static_cast<double>(draw.triplets.size());
        out.telemetry.neg_sim = neg / static_cast<double>(draw.triplets.size());
      }
    } else {
      out.telemetry.skipped = 0;
    }
    out.l_itl = l_itl;
    out.telemetry.l_itl = l_itl.item();
    out.loss = combined_loss(out.l_ce, l_itl, config.lambda);
  }
  out.telemetry.loss = out.loss.item();
  return out;
}

std::vector<PreparedSample> prepare(const SignTranslator& model,
                                    const std::vector<Sample>& samples) {
  std::vector<PreparedSample> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back({&s, model.target_ids(s.text)});
  return out;
}

void copy_state(const SignTranslator& from, SignTranslator& to) {
  ParameterSet& dst = to.params();
  const ParameterSet& src = from.params();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    Tensor t = dst.tensors()[i];
    auto values = src.tensors()[i].data();
    std::copy(values.begin(), values.end(), t.mutable_data().begin());
  }
}

}  // namespace

BpeModel build_bpe(const TrainConfig& config, const std::vector<std::string>& texts) {
  return BpeModel::train(texts, config.bpe_vocab_size);
}

AnchorVocab build_anchors(const TrainConfig& config, const std::vector<std::string>& texts,
                          const Lexicon& lexicon) {
  return select_anchors(tag_corpus(texts, lexicon),
                        preset_tags(parse_word_type_preset(config.anchor_preset)),
                        config.anchor_min_count, config.anchor_max_doc_fraction);
}

TrainResult train(SignTranslator& model, const std::vector<Sample>& samples,
                  const TrainOptions& options) {
  if (samples.empty()) throw ParameterError("training set is empty");
  const TrainConfig& config = model.config();
  const std::size_t threads = resolve_threads(options.threads);
  const std::size_t n = samples.size();
  const std::size_t batch_size = std::min(config.batch_size, n);
  const std::size_t steps_per_epoch = (n + batch_size - 1) / batch_size;
  const std::size_t total_steps = steps_per_epoch * config.epochs;

  AdamWState state = AdamWState::zeros_like(model.params());
  std::size_t step = 0;
  if (options.resume_from) {
    LoadedCheckpoint ckpt = load_checkpoint(*options.resume_from);
    if (ckpt.model->config().to_json() != config.to_json()) {
      throw ParameterError("checkpoint " + options.resume_from->string() +
                           " was trained with a different configuration");
    }
    if (ckpt.model->params().names() != model.params().names()) {
      throw ParameterError("checkpoint " + options.resume_from->string() +
                           " does not match the model's parameters");
    }
    copy_state(*ckpt.model, model);
    if (!ckpt.optimizer.m.empty()) state = std::move(ckpt.optimizer);
    step = ckpt.info.step;
  }

  ParameterSet& params = model.params();
  params.set_requires_grad("backbone.", config.e2e);
  if (!config.ccm) params.set_requires_grad("ccm.", false);

  AdamWOptions adam;
  adam.weight_decay = config.weight_decay;

  std::ofstream telemetry_out;
  fs::path checkpoint_dir;
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    telemetry_out.open(options.out_dir / "telemetry.jsonl",
                       options.resume_from ? std::ios::app : std::ios::trunc);
    if (!telemetry_out) throw LoadError("cannot write telemetry under " + options.out_dir.string());
    checkpoint_dir = options.out_dir / "checkpoint";
  }

  const std::vector<PreparedSample> prepared = prepare(model, samples);
  TrainResult result;
  const std::size_t stop = options.max_steps ? std::min(options.max_steps, total_steps)
                                             : total_steps;

  while (step < stop) {
    const std::size_t epoch = step / steps_per_epoch;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = derive_rng(config.seed, {hash_str("shuffle"), epoch});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t b = step % steps_per_epoch; b < steps_per_epoch && step < stop; ++b) {
      std::vector<PreparedSample> batch;
      for (std::size_t i = b * batch_size; i < std::min(n, (b + 1) * batch_size); ++i) {
        batch.push_back(prepared[order[i]]);
      }
      params.zero_grad();
      StepResult r = batch_objective(model, batch, step, true, threads);
      if (!std::isfinite(r.telemetry.loss)) {
        throw NumericError("non-finite loss at step " + std::to_string(step + 1) + " (epoch " +
                           std::to_string(epoch) + ")");
      }
      backward(r.loss);
      r.telemetry.grad_norm = clip_grad_norm(params, config.grad_clip);
      ++step;
      r.telemetry.step = step;
      r.telemetry.epoch = epoch;
      r.telemetry.lr = lr_schedule(step, config.learning_rate, config.warmup_steps, total_steps);
      adamw_step(params, state, r.telemetry.lr, adam);
      if (config.precision == 32) round_to_float(params);
      params.zero_grad();

      if (telemetry_out.is_open()) telemetry_out << r.telemetry.to_json().dump() << '\n';
      if (options.on_step) options.on_step(r.telemetry);
      epoch_loss += r.telemetry.loss;
      ++epoch_steps;
      result.telemetry.push_back(r.telemetry);
    }
    const bool epoch_done = step % steps_per_epoch == 0;
    if (!checkpoint_dir.empty() && (epoch_done || step == stop)) {
      telemetry_out.flush();
      save_checkpoint(checkpoint_dir, model, &state, {step, step / steps_per_epoch});
    }
    if (options.log && epoch_steps > 0) {
      *options.log << "epoch " << epoch + 1 << "/" << config.epochs << " step " << step
                   << " loss " << std::setprecision(6) << epoch_loss / epoch_steps << '\n';
    }
  }
  params.set_requires_grad("backbone.", true);
  params.set_requires_grad("ccm.", true);
  result.step = step;
  result.epoch = step / steps_per_epoch;
  return result;
}

LossBreakdown evaluate_loss(const SignTranslator& model, const std::vector<Sample>& batch,
                            std::uint64_t triplet_seed) {
  if (batch.empty()) throw ParameterError("empty batch");
  NoGradGuard no_grad;
  StepResult r = batch_objective(model, prepare(model, batch), triplet_seed, false, 1);
  return {r.telemetry.loss, r.telemetry.l_ce, r.telemetry.l_itl, r.telemetry.triplets};
}

ConceptProbe probe_concepts(const SignTranslator& model, const std::vector<Sample>& samples,
                            std::size_t batch_size) {
  ConceptProbe probe;
  const ConceptMiner* miner = model.concept_miner();
  if (!miner || samples.empty() || batch_size == 0) return probe;
  NoGradGuard no_grad;
  double pos = 0.0, neg = 0.0;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    std::vector<std::string> texts;
    std::vector<EncodedFeatures> encoded;
    for (std::size_t i = start; i < end; ++i) {
      texts.push_back(samples[i].text);
      encoded.push_back(model.encode(samples[i].pose, ForwardContext{}, false));
    }
    BatchAnchorSet anchors = collect_batch_anchors(texts, model.anchors());
    if (anchors.size() == 0) continue;
    std::vector<Triplet> triplets;
    for (std::size_t m = 0; m < anchors.size(); ++m) {
      const auto& members = anchors.membership[m];
      for (std::size_t p : members) {
        for (std::size_t q = 0; q < anchors.samples; ++q) {
          if (!std::binary_search(members.begin(), members.end(), q)) triplets.push_back({m, p, q});
        }
      }
    }
    if (triplets.empty()) continue;
    Tensor h = miner->anchor_query(model.params(), anchors, encoded);
    Tensor q = ConceptMiner::batch_queries(model.params(), anchors);
    for (const auto& s : triplet_similarities(h, triplets, q)) {
      pos += s.positive;
      neg += s.negative;
    }
    probe.pairs += triplets.size();
  }
  if (probe.pairs > 0) {
    probe.pos_sim = pos / static_cast<double>(probe.pairs);
    probe.neg_sim = neg / static_cast<double>(probe.pairs);
  }
  return probe;
}

std::vector<Translation> translate_all(const SignTranslator& model,
                                       const std::vector<Sample>& samples, std::size_t beam_size,
                                       std::size_t threads) {
  std::vector<Translation> out(samples.size());
  parallel_for(samples.size(), resolve_threads(threads), [&](std::size_t i) {
    GenerationResult g = model.generate(samples[i].pose, beam_size);
    out[i] = {samples[i].id, model.detokenize(g.tokens), g.tokens, g.score, g.finished};
  });
  return out;
}

Evaluation evaluate(const SignTranslator& model, const std::vector<Sample>& samples,
                    std::size_t beam_size, std::size_t threads) {
  if (samples.empty()) throw ParameterError("evaluation set is empty");
  Evaluation eval;
  eval.translations = translate_all(model, samples, beam_size, threads);
  std::vector<std::string> hyps, refs;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    hyps.push_back(eval.translations[i].hypothesis);
    refs.push_back(samples[i].text);
  }
  eval.report = score_corpus(hyps, refs);
  return eval;
}

void write_evaluation(const Evaluation& eval, const std::vector<Sample>& samples,
                      const fs::path& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "report.json");
    out << eval.report.to_json().dump(2) << '\n';
    if (!out) throw LoadError("cannot write " + (out_dir / "report.json").string());
  }
  std::ofstream out(out_dir / "hypotheses.tsv");
  for (std::size_t i = 0; i < eval.translations.size(); ++i) {
    out << eval.translations[i].id << '\t' << eval.translations[i].hypothesis << '\t'
        << samples.at(i).text << '\n';
  }
  if (!out) throw LoadError("cannot write " + (out_dir / "hypotheses.tsv").string());
}

std::vector<SweepRun> sweep(const TrainConfig& base, const std::vector<Sample>& samples,
                            const std::vector<double>& lambdas, const std::vector<double>& margins,
                            const fs::path& out_dir, const std::optional<fs::path>& embeddings,
                            std::ostream* log) {
  std::vector<std::string> texts;
  for (const Sample& s : samples) texts.push_back(s.text);
  const BpeModel bpe = build_bpe(base, texts);
  const AnchorVocab anchors = build_anchors(base, texts);
  const EmbeddingInit init = load_pretrained_embeddings(embeddings, anchors, base.d_ca, base.seed);

  std::vector<SweepRun> runs;
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (double lambda : lambdas) {
    for (double margin : margins) {
      TrainConfig config = base;
      config.lambda = lambda;
      config.margin = margin;
      std::ostringstream name;
      name << "lambda_" << lambda << "_margin_" << margin;
      SignTranslator model(config, bpe, anchors, SkeletonSpec::default_spec(), init);
      TrainOptions options;
      options.out_dir = out_dir / name.str();
      options.log = log;
      if (log) *log << "== " << name.str() << '\n';
      TrainResult r = train(model, samples, options);

      SweepRun run{lambda, margin, 0.0, 0.0, 0.0, options.out_dir / "telemetry.jsonl"};
      if (!r.telemetry.empty()) {
        run.initial_l_itl = r.telemetry.front().l_itl;
        const std::size_t last_epoch = r.telemetry.back().epoch;
        std::size_t count = 0;
        for (const auto& t : r.telemetry) {
          if (t.epoch != last_epoch) continue;
          run.final_l_ce += t.l_ce;
          run.final_l_itl += t.l_itl;
          ++count;
        }
        run.final_l_ce /= static_cast<double>(count);
        run.final_l_itl /= static_cast<double>(count);
      }
      summary.push_back({{"lambda", lambda},
                         {"margin", margin},
                         {"initial_l_itl", run.initial_l_itl},
                         {"final_l_ce", run.final_l_ce},
                         {"final_l_itl", run.final_l_itl},
                         {"telemetry", run.telemetry.string()}});
      runs.push_back(run);
    }
  }
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / "sweep.json");
  out << summary.dump(2) << '\n';
  return runs;
}

}  // namespace slt
