// Command-line front end: simulation, ingestion, calibration, training,
// reconstruction and evaluation as reproducible, manifest-writing runs.

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "morpinet/dataset.hpp"
#include "morpinet/dnet.hpp"
#include "morpinet/errors.hpp"
#include "morpinet/eval.hpp"
#include "morpinet/io.hpp"
#include "morpinet/morpi.hpp"
#include "morpinet/pipeline.hpp"
#include "morpinet/simgen.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace morpinet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string iso_now() {
    char buf[32];
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_run_manifest(const fs::path& path, const std::string& command,
                        const json& config,
                        const std::map<std::string, std::string>& inputs,
                        const std::vector<std::string>& outputs) {
    json m;
    m["command"] = command;
    m["timestamp"] = iso_now();
    m["config"] = config;
    json in = json::object();
    for (const auto& [file, digest] : inputs) in[file] = digest;
    m["inputs"] = in;
    m["outputs"] = outputs;
    write_file(path.string(), m.dump(2) + "\n");
}

SerpentineSpec serpentine_from_json(const json& j) {
    SerpentineSpec s;
    if (j.contains("heading")) s.heading = j["heading"];
    if (j.contains("speed")) s.speed = j["speed"];
    if (j.contains("amplitude")) s.amplitude = j["amplitude"];
    if (j.contains("frequency")) s.frequency = j["frequency"];
    if (j.contains("duration")) s.duration = j["duration"];
    if (j.contains("fs_imu")) s.fs_imu = j["fs_imu"];
    if (j.contains("fs_rtk")) s.fs_rtk = j["fs_rtk"];
    return s;
}

SensorErrorSpec errors_from_json(const json& j) {
    SensorErrorSpec e;
    if (j.contains("gyro_bias_deg_h")) e.gyro_bias_deg_h = j["gyro_bias_deg_h"];
    if (j.contains("gyro_noise_deg_s_sqrt_hz")) {
        e.gyro_noise_deg_s_sqrt_hz = j["gyro_noise_deg_s_sqrt_hz"];
    }
    if (j.contains("accel_bias_mg")) e.accel_bias_mg = j["accel_bias_mg"];
    if (j.contains("accel_noise_ug_sqrt_hz")) {
        e.accel_noise_ug_sqrt_hz = j["accel_noise_ug_sqrt_hz"];
    }
    return e;
}

// --- simulate ---

struct SimulateOpts {
    std::string spec_file;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool clean = false;
};

int cmd_simulate(const SimulateOpts& opt) {
    SerpentineSpec spec;
    SensorErrorSpec err;
    json spec_json = json::object();
    if (!opt.spec_file.empty()) {
        spec_json = json::parse(read_file(opt.spec_file), nullptr, false);
        if (spec_json.is_discarded()) {
            throw DataError(opt.spec_file + ": invalid JSON spec");
        }
        if (spec_json.contains("serpentine")) {
            spec = serpentine_from_json(spec_json["serpentine"]);
        }
        if (spec_json.contains("errors")) err = errors_from_json(spec_json["errors"]);
    }
    err.seed = opt.seed;

    fs::create_directories(opt.out_dir);
    const GeneratedPath path = gen_path(spec);
    const ImuStream clean = path_to_imu(path.dense);
    const ImuStream& samples = opt.clean ? clean : corrupt(clean, err).samples;

    const fs::path out(opt.out_dir);
    write_imu_csv((out / "imu.csv").string(), samples);
    write_rtk_csv((out / "rtk.csv").string(), path.rtk);

    Trajectory2D gt;
    for (const auto& d : path.dense) gt.push_back(d.t, {d.pos.x(), d.pos.y(), d.psi});
    write_trajectory_csv((out / "gt.csv").string(), gt);

    json cfg;
    cfg["seed"] = opt.seed;
    cfg["clean"] = opt.clean;
    cfg["serpentine"] = {{"heading", spec.heading}, {"speed", spec.speed},
                         {"amplitude", spec.amplitude}, {"frequency", spec.frequency},
                         {"duration", spec.duration}, {"fs_imu", spec.fs_imu},
                         {"fs_rtk", spec.fs_rtk}};
    cfg["errors"] = {{"gyro_bias_deg_h", err.gyro_bias_deg_h},
                     {"gyro_noise_deg_s_sqrt_hz", err.gyro_noise_deg_s_sqrt_hz},
                     {"accel_bias_mg", err.accel_bias_mg},
                     {"accel_noise_ug_sqrt_hz", err.accel_noise_ug_sqrt_hz}};
    std::map<std::string, std::string> inputs;
    if (!opt.spec_file.empty()) inputs[opt.spec_file] = digest_file(opt.spec_file);
    write_run_manifest(out / "manifest_simulate.json", "simulate", cfg, inputs,
                       {"imu.csv", "rtk.csv", "gt.csv"});
    std::cout << "simulate: " << samples.size() << " IMU samples, " << path.rtk.size()
              << " RTK fixes -> " << opt.out_dir << "\n";
    return kExitOk;
}

// --- ingest ---

struct IngestOpts {
    std::string manifest;
    std::string out_file;
    int hop = 12;
    std::string role = "train";
    bool assume_synced = false;
};

int cmd_ingest(const IngestOpts& opt) {
    const Manifest manifest = load_manifest(opt.manifest);
    std::map<std::string, std::string> inputs;
    inputs[opt.manifest] = digest_file(opt.manifest);

    WindowedDataset all;
    std::size_t used_files = 0;
    for (const auto& entry : manifest.entries) {
        const bool wanted =
            opt.role == "all" ||
            (opt.role == "train" && entry.role == TrajectoryRole::Train) ||
            (opt.role == "test" && entry.role == TrajectoryRole::Test) ||
            (opt.role == "straight" && entry.role == TrajectoryRole::Straight);
        if (!wanted) continue;

        const RtkStream rtk = load_rtk(entry.rtk_file);
        inputs[entry.rtk_file] = digest_file(entry.rtk_file);
        for (const auto& imu_file : entry.imu_files) {
            ImuStream imu = load_imu(imu_file);
            inputs[imu_file] = digest_file(imu_file);
            RtkStream rtk_aligned = rtk;
            if (!opt.assume_synced) {
                SyncResult sync = synchronize(imu, rtk);
                imu = std::move(sync.imu);
            }
            const std::string id =
                entry.id + "/" + fs::path(imu_file).filename().string();
            WindowedDataset ds = make_windows(imu, rtk_aligned, kWindowLen, opt.hop, id);
            merge_windows(all, ds);
            ++used_files;
        }
    }
    if (used_files == 0) {
        throw DataError("ingest: no trajectories matched role '" + opt.role + "'");
    }
    all.hop = opt.hop;
    save_window_cache(opt.out_file, all);

    json cfg;
    cfg["hop"] = opt.hop;
    cfg["role"] = opt.role;
    cfg["assume_synced"] = opt.assume_synced;
    cfg["windows"] = all.windows.size();
    cfg["skipped"] = all.skipped;
    cfg["digest"] = window_dataset_digest(all);
    write_run_manifest(fs::path(opt.out_file).string() + ".manifest.json", "ingest",
                       cfg, inputs, {opt.out_file});
    std::cout << "ingest: " << all.windows.size() << " windows (" << all.skipped
              << " skipped) from " << used_files << " IMU files -> " << opt.out_file
              << "\n";
    return kExitOk;
}

// --- calibrate-gain ---

struct CalibrateOpts {
    std::string manifest;
    std::string mode = "A";
    std::string out_file;
    double min_separation = 1.0;
    double min_prominence = -1.0;
    double cutoff = 5.0;
};

int cmd_calibrate_gain(const CalibrateOpts& opt) {
    const Manifest manifest = load_manifest(opt.manifest);
    const MorpiMode mode = morpi_mode_from_name(opt.mode);
    PeakDetectConfig peaks;
    peaks.min_separation = opt.min_separation;
    peaks.min_prominence = opt.min_prominence;
    peaks.smoothing_cutoff = opt.cutoff;

    std::map<std::string, std::string> inputs;
    inputs[opt.manifest] = digest_file(opt.manifest);
    std::vector<GainSegment> segments;
    double fs = 120.0;
    for (const auto& entry : manifest.entries) {
        if (!entry.known_distance) continue;
        for (const auto& imu_file : entry.imu_files) {
            const ImuStream imu = load_imu(imu_file);
            inputs[imu_file] = digest_file(imu_file);
            if (imu.size() > 1) {
                fs = static_cast<double>(imu.size() - 1) /
                     (imu.back().t - imu.front().t);
            }
            GainSegment seg;
            seg.signal = morpi_channel(imu, mode);
            seg.known_distance = *entry.known_distance;
            segments.push_back(std::move(seg));
        }
    }
    if (segments.empty()) {
        throw DataError("calibrate-gain: manifest lists no known_distance segments");
    }
    const WeinbergGain gain = calibrate_gain(segments, fs, mode, peaks);
    save_gain(opt.out_file, gain);

    json cfg;
    cfg["mode"] = opt.mode;
    cfg["G"] = gain.g;
    cfg["segments_used"] = gain.segments_used;
    write_run_manifest(opt.out_file + ".manifest.json", "calibrate-gain", cfg, inputs,
                       {opt.out_file});
    std::cout << "calibrate-gain: G = " << gain.g << " from " << gain.segments_used
              << " segments -> " << opt.out_file << "\n";
    return kExitOk;
}

// --- train ---

struct TrainOpts {
    std::string cache;
    std::string out_file;
    std::string log_file;
    DnetConfig cfg;
};

int cmd_train(const TrainOpts& opt) {
    const WindowedDataset ds = load_window_cache(opt.cache);
    if (ds.windows.empty()) throw DataError("train: empty window cache");

    const auto [train_set, val_set] = split_validation(ds.windows, opt.cfg.val_fraction);
    const TrainResult result = dnet_train(train_set, val_set, opt.cfg);

    const std::string log_csv = render_training_log(result.log);
    const std::string log_path =
        opt.log_file.empty() ? opt.out_file + ".log.csv" : opt.log_file;
    write_file(log_path, log_csv);
    save_weights(opt.out_file, result.weights, opt.cfg.seed, digest_string(log_csv));

    json cfg;
    cfg["seed"] = opt.cfg.seed;
    cfg["epochs"] = opt.cfg.epochs;
    cfg["batch"] = opt.cfg.batch;
    cfg["lr0"] = opt.cfg.lr0;
    cfg["val_fraction"] = opt.cfg.val_fraction;
    cfg["best_epoch"] = result.best_epoch;
    cfg["best_val_mae"] = result.best_val_mae;
    cfg["train_windows"] = train_set.size();
    cfg["val_windows"] = val_set.size();
    write_run_manifest(opt.out_file + ".manifest.json", "train", cfg,
                       {{opt.cache, digest_file(opt.cache)}},
                       {opt.out_file, log_path});
    std::cout << "train: best val MAE " << result.best_val_mae << " at epoch "
              << result.best_epoch << " -> " << opt.out_file << "\n";
    return kExitOk;
}

// --- predict ---

struct PredictOpts {
    std::string weights;
    std::string cache;
    std::string out_file;
};

int cmd_predict(const PredictOpts& opt) {
    const DnetWeights w = load_weights(opt.weights);
    const WindowedDataset ds = load_window_cache(opt.cache);
    if (ds.windows.empty()) throw DataError("predict: empty window cache");
    const Eigen::VectorXd pred = dnet_predict(w, ds.windows);

    std::vector<double> est(ds.windows.size()), gt(ds.windows.size());
    std::ostringstream os;
    os << "index,trajectory,t_start,target_m,predicted_m\n";
    char line[196];
    for (std::size_t i = 0; i < ds.windows.size(); ++i) {
        est[i] = pred(static_cast<Eigen::Index>(i));
        gt[i] = ds.windows[i].target;
        std::snprintf(line, sizeof(line), "%zu,%s,%.9f,%.9g,%.9g\n", i,
                      ds.trajectory_ids[static_cast<std::size_t>(
                          ds.windows[i].trajectory)].c_str(),
                      ds.windows[i].t_start, gt[i], est[i]);
        os << line;
    }
    write_file(opt.out_file, os.str());

    json cfg;
    cfg["drmse_m"] = drmse(est, gt);
    cfg["dmae_m"] = dmae(est, gt);
    cfg["dbias_m"] = dbias(est, gt);
    cfg["windows"] = ds.windows.size();
    write_run_manifest(opt.out_file + ".manifest.json", "predict", cfg,
                       {{opt.weights, digest_file(opt.weights)},
                        {opt.cache, digest_file(opt.cache)}},
                       {opt.out_file});
    std::cout << "predict: DRMSE " << cfg["drmse_m"] << " m, DMAE " << cfg["dmae_m"]
              << " m (signed mean " << cfg["dbias_m"] << " m) over " << ds.windows.size()
              << " windows\n";
    return kExitOk;
}

// --- reconstruct ---

struct ReconstructOpts {
    std::string method;
    std::string imu_file;
    std::string rtk_file;
    std::string gain_file;
    std::string weights_file;
    std::string out_dir;
    double init_x = 0.0;
    double init_y = 0.0;
    double init_psi = std::numeric_limits<double>::quiet_NaN();
    double static_start = std::numeric_limits<double>::quiet_NaN();
    double static_end = std::numeric_limits<double>::quiet_NaN();
    double gamma = 0.01;
    double mu = 0.01;
    std::string accel_norm = "l2";
    bool gyro_heading = false;
    bool assume_synced = false;
};

int cmd_reconstruct(const ReconstructOpts& opt) {
    const Method method = method_from_name(opt.method);
    ImuStream imu = load_imu(opt.imu_file);
    std::map<std::string, std::string> inputs;
    inputs[opt.imu_file] = digest_file(opt.imu_file);

    MethodArtifacts art;
    art.ahrs.gamma = opt.gamma;
    art.ahrs.mu = opt.mu;
    art.ahrs.accel_norm = opt.accel_norm == "l1" ? AccelNorm::L1 : AccelNorm::L2;
    art.gyro_only_heading = opt.gyro_heading;
    art.init.x = opt.init_x;
    art.init.y = opt.init_y;

    if (!opt.rtk_file.empty()) {
        const RtkStream rtk = load_rtk(opt.rtk_file);
        inputs[opt.rtk_file] = digest_file(opt.rtk_file);
        if (!opt.assume_synced) {
            SyncResult sync = synchronize(imu, rtk);
            imu = std::move(sync.imu);
        }
        // Initial pose from the first clearly-moving fix pair.
        for (std::size_t i = 0; i + 1 < rtk.size(); ++i) {
            if (gt_distance(rtk[i], rtk[i + 1]) > 0.05) {
                art.init.x = rtk[i].n;
                art.init.y = rtk[i].e;
                art.init.psi = gt_heading(rtk[i], rtk[i + 1]);
                break;
            }
        }
    }
    if (!std::isnan(opt.init_psi)) art.init.psi = opt.init_psi;

    if (!std::isnan(opt.static_start) && !std::isnan(opt.static_end)) {
        art.calib = static_calibrate(imu, opt.static_start, opt.static_end);
    }
    if (!opt.gain_file.empty()) {
        art.gain = load_gain(opt.gain_file);
        inputs[opt.gain_file] = digest_file(opt.gain_file);
    }
    if (!opt.weights_file.empty()) {
        art.weights = load_weights(opt.weights_file);
        inputs[opt.weights_file] = digest_file(opt.weights_file);
    }

    const Trajectory2D traj = run_method(method, imu, art);

    fs::create_directories(opt.out_dir);
    const fs::path out(opt.out_dir);
    const std::string stem = "trajectory_" + opt.method;
    write_trajectory_csv((out / (stem + ".csv")).string(), traj);
    write_trajectory_geojson((out / (stem + ".geojson")).string(), traj);

    json cfg;
    cfg["method"] = opt.method;
    cfg["init"] = {{"x", art.init.x}, {"y", art.init.y}, {"psi", art.init.psi}};
    cfg["gamma"] = opt.gamma;
    cfg["mu"] = opt.mu;
    cfg["accel_norm"] = opt.accel_norm;
    cfg["gyro_heading"] = opt.gyro_heading;
    cfg["calibrated"] = art.calib.has_value();
    cfg["poses"] = traj.size();
    write_run_manifest(out / ("manifest_reconstruct_" + opt.method + ".json"),
                       "reconstruct", cfg, inputs, {stem + ".csv", stem + ".geojson"});
    std::cout << "reconstruct " << opt.method << ": " << traj.size() << " poses -> "
              << (out / (stem + ".csv")).string() << "\n";
    return kExitOk;
}

// --- evaluate ---

struct EvaluateOpts {
    std::string gt_file;
    std::string gt_format = "traj";
    std::vector<std::string> estimates;
    std::string out_file;
    std::string reference;
};

int cmd_evaluate(const EvaluateOpts& opt) {
    Trajectory2D gt;
    if (opt.gt_format == "rtk") {
        gt = rtk_to_trajectory(load_rtk(opt.gt_file));
    } else if (opt.gt_format == "traj") {
        gt = read_trajectory_csv(opt.gt_file);
    } else {
        throw DataError("evaluate: unknown --gt-format '" + opt.gt_format + "'");
    }

    std::map<std::string, std::string> inputs;
    inputs[opt.gt_file] = digest_file(opt.gt_file);

    std::ostringstream os;
    os << "estimate,prmse_m,pmae_m,path_length_m,duration_s,poses\n";
    std::cout << "estimate                         PRMSE[m]   PMAE[m]\n";
    char line[256];
    for (const auto& est_file : opt.estimates) {
        const Trajectory2D est = read_trajectory_csv(est_file);
        inputs[est_file] = digest_file(est_file);
        const double r = prmse(est, gt);
        const double m = pmae(est, gt);
        std::snprintf(line, sizeof(line), "%s,%.9g,%.9g,%.9g,%.9g,%zu\n",
                      est_file.c_str(), r, m, path_length(est),
                      est.points.back().t - est.points.front().t, est.size());
        os << line;
        std::snprintf(line, sizeof(line), "%-32s %9.3f %9.3f\n",
                      fs::path(est_file).filename().string().c_str(), r, m);
        std::cout << line;
    }
    if (!opt.out_file.empty()) {
        write_file(opt.out_file, os.str());
        write_run_manifest(opt.out_file + ".manifest.json", "evaluate",
                           {{"gt_format", opt.gt_format}}, inputs, {opt.out_file});
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pure-inertial positioning for serpentine-driven mobile robots"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML config file with flag defaults");

    SimulateOpts sim;
    auto* c_sim = app.add_subcommand("simulate", "Generate a synthetic serpentine run");
    c_sim->add_option("--spec", sim.spec_file, "JSON spec (serpentine + sensor errors)");
    c_sim->add_option("--seed", sim.seed, "RNG seed")->required();
    c_sim->add_option("--out", sim.out_dir, "output directory")->required();
    c_sim->add_flag("--clean", sim.clean, "skip sensor error injection");

    IngestOpts ing;
    auto* c_ing = app.add_subcommand("ingest", "Build a windowed dataset cache");
    c_ing->add_option("--manifest", ing.manifest, "dataset manifest JSON")->required();
    c_ing->add_option("--out", ing.out_file, "cache file")->required();
    c_ing->add_option("--hop", ing.hop, "window hop in IMU samples (12 or 24)");
    c_ing->add_option("--role", ing.role, "train|test|straight|all");
    c_ing->add_flag("--assume-synced", ing.assume_synced,
                    "skip motion-onset synchronization");

    CalibrateOpts cal;
    auto* c_cal = app.add_subcommand("calibrate-gain",
                                     "Fit the peak-to-peak distance gain");
    c_cal->add_option("--manifest", cal.manifest, "manifest with known_distance entries")
        ->required();
    c_cal->add_option("--mode", cal.mode, "A (accel y) or G (gyro z)");
    c_cal->add_option("--out", cal.out_file, "gain record JSON")->required();
    c_cal->add_option("--min-separation", cal.min_separation, "peak separation [s]");
    c_cal->add_option("--min-prominence", cal.min_prominence,
                      "peak prominence (<0: 0.5*std)");
    c_cal->add_option("--cutoff", cal.cutoff, "low-pass cutoff [Hz]");

    TrainOpts tr;
    auto* c_tr = app.add_subcommand("train", "Train the distance regressor");
    c_tr->add_option("--cache", tr.cache, "windowed dataset cache")->required();
    c_tr->add_option("--out", tr.out_file, "weights file")->required();
    c_tr->add_option("--log", tr.log_file, "training log CSV (default <out>.log.csv)");
    c_tr->add_option("--seed", tr.cfg.seed, "RNG seed")->required();
    c_tr->add_option("--epochs", tr.cfg.epochs, "training epochs");
    c_tr->add_option("--batch", tr.cfg.batch, "mini-batch size");
    c_tr->add_option("--lr0", tr.cfg.lr0, "initial learning rate");
    c_tr->add_option("--dropout-flat", tr.cfg.dropout_flat, "conv-branch dropout");
    c_tr->add_option("--dropout-fc", tr.cfg.dropout_fc, "FC dropout");
    c_tr->add_option("--patience", tr.cfg.plateau_patience, "plateau patience [epochs]");
    c_tr->add_option("--factor", tr.cfg.plateau_factor, "plateau LR factor");
    c_tr->add_option("--val-fraction", tr.cfg.val_fraction, "validation tail fraction");
    c_tr->add_flag("--standardize", tr.cfg.standardize,
                   "per-channel input standardization");

    PredictOpts pr;
    auto* c_pr = app.add_subcommand("predict", "Run the regressor over a cache");
    c_pr->add_option("--weights", pr.weights, "weights file")->required();
    c_pr->add_option("--cache", pr.cache, "windowed dataset cache")->required();
    c_pr->add_option("--out", pr.out_file, "predictions CSV")->required();

    ReconstructOpts rec;
    auto* c_rec = app.add_subcommand("reconstruct", "Reconstruct a 2D trajectory");
    c_rec->add_option("--method", rec.method, "ins2d|ins3d|morpi-a|morpi-g|morpinet")
        ->required();
    c_rec->add_option("--imu", rec.imu_file, "IMU CSV")->required();
    c_rec->add_option("--rtk", rec.rtk_file, "RTK CSV (sync + initial pose)");
    c_rec->add_option("--gain", rec.gain_file, "gain record (morpi methods)");
    c_rec->add_option("--weights", rec.weights_file, "weights file (morpinet)");
    c_rec->add_option("--out", rec.out_dir, "output directory")->required();
    c_rec->add_option("--init-x", rec.init_x, "initial north [m]");
    c_rec->add_option("--init-y", rec.init_y, "initial east [m]");
    c_rec->add_option("--init-psi", rec.init_psi, "initial heading [rad]");
    c_rec->add_option("--static-start", rec.static_start, "calibration span start [s]");
    c_rec->add_option("--static-end", rec.static_end, "calibration span end [s]");
    c_rec->add_option("--gamma", rec.gamma, "orientation fusion weight");
    c_rec->add_option("--mu", rec.mu, "orientation gradient step");
    c_rec->add_option("--accel-norm", rec.accel_norm, "l2|l1 accelerometer norm");
    c_rec->add_flag("--gyro-heading", rec.gyro_heading,
                    "integrate heading from the gyro only (morpi)");
    c_rec->add_flag("--assume-synced", rec.assume_synced,
                    "skip motion-onset synchronization");

    EvaluateOpts ev;
    auto* c_ev = app.add_subcommand("evaluate", "Score estimates against ground truth");
    c_ev->add_option("--gt", ev.gt_file, "ground-truth file")->required();
    c_ev->add_option("--gt-format", ev.gt_format, "traj|rtk");
    c_ev->add_option("--out", ev.out_file, "report CSV");
    c_ev->add_option("estimates", ev.estimates, "trajectory CSVs to score")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*c_sim) return cmd_simulate(sim);
        if (*c_ing) return cmd_ingest(ing);
        if (*c_cal) return cmd_calibrate_gain(cal);
        if (*c_tr) return cmd_train(tr);
        if (*c_pr) return cmd_predict(pr);
        if (*c_rec) return cmd_reconstruct(rec);
        if (*c_ev) return cmd_evaluate(ev);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
