//! Text printed by `swarmlab schema`.

use crate::config::RunConfig;

const KEYS: &str = r#"# swarmlab configuration reference
#
# One TOML document; every key is optional and unknown keys are errors.
# Override any key from the command line with --set key.path=value, where
# value is a TOML literal (bare words are taken as strings). The variable
# SWARMLAB_OUTPUT_DIR replaces output.dir.
#
# seed                      u64     master seed; every sample seed derives from it
# workers                   usize   force-evaluation threads (1 = bitwise reproducible)
#
# [region]
#   dim                     2 | 3
#   kind.type = "ball"            radius
#   kind.type = "speed_ball"      profile = { type = "clamped_linear", base, slope, min, max }
#                                 radius(|v|) = clamp(base + slope |v|, min, max)
#   kind.type = "vision_cone"     radius, profile = { theta_star, k }
#                                 half-angle theta(|v|) = theta_star + (pi - theta_star) exp(-k (|v| - 1)^2)
#                                 for |v| > 1, pi below
#
# [force]
#   type = "cucker_smale"         psi = { type = "constant", value } | { type = "rational", gamma }
#                                 h = { type = "identity" } | { type = "clipped", max }
#   type = "attractive_repulsive" grad_phi = { type = "gaussian_morse", c_r, l_r, c_a, l_a }
#   type = "first_order"          grad_phi as above, w_field = { type = "constant", w = [..] }
#                                 | { type = "rotational", speed, omega }
#
# [dynamics]
#   dt, t_end               explicit Euler step and horizon
#   mode.type = "sharp"           selection = { type = "midpoint" | "lower" | "upper" }
#                                 | { type = "seeded_random", seed }, tol_b
#   mode.type = "mollified"       params = { eps, eta, quad_nodes }, tabulate
#   record_every            snapshot stride of `simulate`, in steps
#   neighbor_grid           cell-list pair search (same sums as the full scan)
#   check_max_speed         abort when the maximal speed grows (Cucker-Smale, h = id only)
#   particles               particle count of `simulate`
#   initial_file            measure CSV used by `simulate` instead of sampling
#
# [study]
#   initial.type = "uniform_box_gaussian_v"  box_lo, box_hi, velocity_mean, velocity_std, velocity_cutoff
#   initial.type = "two_cluster_flock"       centers, spreads, velocities, velocity_std, velocity_cutoff
#   initial.type = "custom"                  samples = [[x.., v..], ..]
#   initial_b               second density of `stability` (default: initial shifted by shift)
#   shift                   position shift used when initial_b is absent
#   n                       particle count of `stability`
#   n_list, n_ref           study sizes and reference size of `converge` (n_ref >= 4 max n_list)
#   times                   comparison times (t = 0 is always added); multiples of dt
#   reference               mollifier { eps, eta, quad_nodes } of reference and stability runs
#   hypcheck                v_samples, eps_grid (values in (0, 1)), n_samples, lemma_samples
#   lipschitz               probes (coarse count; refined set is 2x), separation
#
# [output]
#   dir                     output directory
#   trajectory              write trajectory.csv in `simulate`
#
# Output files (all reals with 17 significant digits)
#   trajectory.csv          t, particle, x1.., v1.., weight
#   diagnostics.csv         t, max_speed, p1.., kinetic_energy (one row per step)
#   convergence.csv         study, N, t, d1, ratio
#   stability.csv           study, N, t, d1, ratio
#   volume_fits.csv         study, v1.., eps, volume, std_err
#   summary.json            report with fitted constants and the pass flag
#   manifest.json           version, subcommand, seed, workers, overrides, config echo, outputs
#   measure CSV (w1 input)  header, then x1.., v1.., weight per atom
#
# Exit status: 0 success, 1 file error, 2 schema or input violation,
# 3 numerical abort, 4 transport size cap. Failures print
# {"error": {"kind", "message", "exit_code"}} on stderr.
#
# Defaults:

"#;

pub fn reference() -> String {
    format!("{KEYS}{}", RunConfig::default().to_toml())
}
