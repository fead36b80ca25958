//! Scenario configuration: parameter groups, defaults, validation, unit
//! conversion and seed derivation.
//!
//! Every power quantity inside the crate is linear (mW or a dimensionless
//! gain). Decibels only appear in the config document and in reports.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Environment variable that overrides the master seed. A `--seed` flag on
/// the command line takes precedence over it.
pub const SEED_ENV_VAR: &str = "UAV_IRS_SEED";

/// Lowest UAV altitude allowed by the airspace safety rule, in meters.
pub const MIN_SAFE_ALTITUDE: f64 = 100.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Converts dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

/// Axis-aligned rectangle on the ground plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Region {
    pub const fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Region {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        self.contains([other.x_min, other.y_min]) && self.contains([other.x_max, other.y_max])
    }

    pub fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [
            p[0].clamp(self.x_min, self.x_max),
            p[1].clamp(self.y_min, self.y_max),
        ]
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    fn check(&self, field: &str, allow_degenerate: bool) -> Result<()> {
        let vals = [self.x_min, self.y_min, self.x_max, self.y_max];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(field, "coordinates must be finite"));
        }
        let ok = if allow_degenerate {
            self.x_max >= self.x_min && self.y_max >= self.y_min
        } else {
            self.x_max > self.x_min && self.y_max > self.y_min
        };
        if !ok {
            return Err(Error::validation(
                field,
                format!(
                    "need x_max > x_min and y_max > y_min, got ({}, {})-({}, {})",
                    self.x_min, self.y_min, self.x_max, self.y_max
                ),
            ));
        }
        Ok(())
    }
}

impl Default for Region {
    fn default() -> Self {
        Region::new(0.0, 0.0, 500.0, 500.0)
    }
}

/// How the probability of an unobstructed UAV-user path is modeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LosModel {
    /// `exp(-λ g_B q h_B / z)` human-body blockage.
    #[default]
    HumanBlockage,
    /// Elevation-angle sigmoid `1 / (1 + a exp(-b (θ - a)))`, θ in degrees.
    /// Kept as an alternative; the blockage model is the reference one.
    ElevationSigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// LoS intercept at 1 m, dB.
    pub a_los: f64,
    /// LoS pathloss exponent.
    pub b_los: f64,
    /// NLoS intercept at 1 m, dB.
    pub a_nlos: f64,
    /// NLoS pathloss exponent.
    pub b_nlos: f64,
    /// Informational; the intercept/slope model already embeds it.
    pub carrier_freq_hz: f64,
    /// IRS elements dedicated to each user.
    pub irs_elements_per_user: u32,
    /// Power reflection coefficient of the IRS, in [0, 1].
    pub irs_reflection_coeff: f64,
    /// Attenuate the reflected path by the UAV-to-IRS LoS leg as well.
    pub irs_uav_leg: bool,
    pub los_model: LosModel,
    pub los_sigmoid_a: f64,
    pub los_sigmoid_b: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            a_los: 61.4,
            b_los: 2.0,
            a_nlos: 72.0,
            b_nlos: 2.92,
            carrier_freq_hz: 28e9,
            irs_elements_per_user: 1 << 17,
            irs_reflection_coeff: 1.0,
            irs_uav_leg: true,
            los_model: LosModel::HumanBlockage,
            los_sigmoid_a: 9.6,
            los_sigmoid_b: 0.28,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockageParams {
    /// Blockers per square meter.
    pub density: f64,
    /// Blocker body diameter, m.
    pub diameter: f64,
    /// Blocker body height, m.
    pub height: f64,
}

impl Default for BlockageParams {
    fn default() -> Self {
        BlockageParams {
            density: 0.01,
            diameter: 0.4,
            height: 1.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerParams {
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
    /// Per-user SINR requirement, dB.
    pub snr_threshold_db: f64,
    /// FTPA decay exponent in [0, 1].
    pub ftpa_decay: f64,
    /// Use the gain exponent with a positive sign, which hands the larger
    /// share to the stronger user. Off by default.
    pub ftpa_positive_exponent: bool,
}

impl Default for PowerParams {
    fn default() -> Self {
        PowerParams {
            tx_power_dbm: 36.0,
            noise_power_dbm: -80.0,
            snr_threshold_db: 20.0,
            ftpa_decay: 0.28,
            ftpa_positive_exponent: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityParams {
    /// m/s
    pub speed_min: f64,
    /// m/s
    pub speed_max: f64,
    /// Pause at each waypoint, s.
    pub pause_s: f64,
    pub slot_duration_s: f64,
    /// Internal integration step between slot boundaries, s.
    pub substep_s: f64,
    pub num_slots: usize,
    /// Where users are dropped at the first slot.
    pub initial_subregion: Region,
}

impl Default for MobilityParams {
    fn default() -> Self {
        MobilityParams {
            speed_min: 0.0,
            speed_max: 0.2,
            pause_s: 0.0,
            slot_duration_s: 300.0,
            substep_s: 1.0,
            num_slots: 5,
            initial_subregion: Region::new(0.0, 0.0, 50.0, 50.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    pub population_size: usize,
    pub max_iterations: usize,
    pub tournament_size: usize,
    pub crossover_prob: f64,
    /// Per-bit flip probability; `1 / genome length` when absent.
    pub mutation_prob_per_bit: Option<f64>,
    pub bits_per_coordinate: u32,
    pub elitism_count: usize,
    pub uav_alt_min: f64,
    pub uav_alt_max: f64,
    /// Height of the IRS elements above ground, m.
    pub irs_height: f64,
    /// Fitness penalty per unit of linear SINR below the threshold.
    pub penalty_weight: f64,
    /// Optional cap on how far the UAV and the vehicle may move between
    /// consecutive slots, m. Excess distance is penalized.
    pub max_displacement_m: Option<f64>,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population_size: 50,
            max_iterations: 50,
            tournament_size: 3,
            crossover_prob: 0.9,
            mutation_prob_per_bit: None,
            bits_per_coordinate: 12,
            elitism_count: 2,
            uav_alt_min: MIN_SAFE_ALTITUDE,
            uav_alt_max: 300.0,
            irs_height: 6.0,
            penalty_weight: 10.0,
            max_displacement_m: None,
        }
    }
}

impl GaParams {
    pub fn genome_len(&self) -> usize {
        5 * self.bits_per_coordinate as usize
    }

    pub fn mutation_rate(&self) -> f64 {
        self.mutation_prob_per_bit
            .unwrap_or(1.0 / self.genome_len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentParams {
    /// Number of consecutive seeds (starting at the master seed) averaged
    /// by `run`.
    pub seed_count: usize,
    /// Where the static IRS sits. When absent it is frozen at the first
    /// slot's jointly optimized position.
    pub static_irs_position: Option<[f64; 2]>,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            seed_count: 20,
            static_irs_position: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Master seed, in [0, 2^63).
    pub seed: u64,
    pub num_users: usize,
    pub region: Region,
    pub channel: ChannelParams,
    pub blockage: BlockageParams,
    pub power: PowerParams,
    pub mobility: MobilityParams,
    pub ga: GaParams,
    pub experiment: ExperimentParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            num_users: 10,
            region: Region::default(),
            channel: ChannelParams::default(),
            blockage: BlockageParams::default(),
            power: PowerParams::default(),
            mobility: MobilityParams::default(),
            ga: GaParams::default(),
            experiment: ExperimentParams::default(),
        }
    }
}

/// Linear quantities computed once from a validated config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// Transmit SNR `P / σ²`.
    pub rho: f64,
    pub gamma_th: f64,
    pub noise_power_mw: f64,
    pub tx_power_mw: f64,
}

pub fn derive(config: &ScenarioConfig) -> DerivedParams {
    let p = &config.power;
    DerivedParams {
        rho: db_to_linear(p.tx_power_dbm - p.noise_power_dbm),
        gamma_th: db_to_linear(p.snr_threshold_db),
        noise_power_mw: dbm_to_mw(p.noise_power_dbm),
        tx_power_mw: dbm_to_mw(p.tx_power_dbm),
    }
}

/// Parses and validates a TOML scenario document. Missing keys take their
/// defaults.
pub fn load_config(text: &str) -> Result<ScenarioConfig> {
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Schema {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().trim().to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config_file(path: &std::path::Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_config(&text)
}

fn line_of(text: &str, offset: usize) -> usize {
    text.as_bytes()[..offset.min(text.len())]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
        + 1
}

fn finite(field: &str, vals: &[f64]) -> Result<()> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::validation(field, "values must be finite"))
    }
}

fn unit_interval(field: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            format!("must lie in [0, 1], got {v}"),
        ))
    }
}

impl ScenarioConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    pub fn derived(&self) -> DerivedParams {
        derive(self)
    }

    /// Copy of this config with a different master seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        ScenarioConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(Error::validation("seed", "must be below 2^63"));
        }
        if self.num_users == 0 {
            return Err(Error::validation("num_users", "need at least one user"));
        }
        self.region.check("Region", false)?;

        let c = &self.channel;
        finite(
            "ChannelParams",
            &[
                c.a_los,
                c.b_los,
                c.a_nlos,
                c.b_nlos,
                c.carrier_freq_hz,
                c.los_sigmoid_a,
                c.los_sigmoid_b,
            ],
        )?;
        if !(c.b_los > 0.0 && c.b_nlos > 0.0) {
            return Err(Error::validation(
                "ChannelParams.b_los/b_nlos",
                "pathloss exponents must be positive",
            ));
        }
        if c.b_nlos < c.b_los {
            return Err(Error::validation(
                "ChannelParams.b_nlos",
                "NLoS exponent must not be below the LoS exponent",
            ));
        }
        if c.irs_elements_per_user == 0 {
            return Err(Error::validation(
                "ChannelParams.irs_elements_per_user",
                "need at least one element",
            ));
        }
        unit_interval("ChannelParams.irs_reflection_coeff", c.irs_reflection_coeff)?;
        if c.carrier_freq_hz <= 0.0 {
            return Err(Error::validation(
                "ChannelParams.carrier_freq_hz",
                "must be positive",
            ));
        }

        let b = &self.blockage;
        if !(b.density > 0.0 && b.diameter > 0.0 && b.height > 0.0)
            || !(b.density.is_finite() && b.diameter.is_finite() && b.height.is_finite())
        {
            return Err(Error::validation(
                "BlockageParams",
                "density, diameter and height must be positive",
            ));
        }

        let p = &self.power;
        finite(
            "PowerParams",
            &[p.tx_power_dbm, p.noise_power_dbm, p.snr_threshold_db],
        )?;
        unit_interval("PowerParams.ftpa_decay", p.ftpa_decay)?;

        let m = &self.mobility;
        finite(
            "MobilityParams",
            &[
                m.speed_min,
                m.speed_max,
                m.pause_s,
                m.slot_duration_s,
                m.substep_s,
            ],
        )?;
        if m.speed_min < 0.0 || m.speed_min > m.speed_max {
            return Err(Error::validation(
                "MobilityParams.speed_min/speed_max",
                format!(
                    "need 0 <= speed_min <= speed_max, got {} and {}",
                    m.speed_min, m.speed_max
                ),
            ));
        }
        if m.pause_s < 0.0 {
            return Err(Error::validation("MobilityParams.pause_s", "must be >= 0"));
        }
        if m.slot_duration_s <= 0.0 || m.substep_s <= 0.0 {
            return Err(Error::validation(
                "MobilityParams.slot_duration_s/substep_s",
                "must be positive",
            ));
        }
        if m.num_slots == 0 {
            return Err(Error::validation(
                "MobilityParams.num_slots",
                "must be >= 1",
            ));
        }
        m.initial_subregion
            .check("MobilityParams.initial_subregion", true)?;
        if !self.region.contains_region(&m.initial_subregion) {
            return Err(Error::validation(
                "MobilityParams.initial_subregion",
                "must lie inside the region",
            ));
        }

        let g = &self.ga;
        if g.population_size < 2 {
            return Err(Error::validation(
                "GaParams.population_size",
                "must be >= 2",
            ));
        }
        if g.max_iterations == 0 {
            return Err(Error::validation("GaParams.max_iterations", "must be >= 1"));
        }
        if g.tournament_size == 0 || g.tournament_size > g.population_size {
            return Err(Error::validation(
                "GaParams.tournament_size",
                "must lie in [1, population_size]",
            ));
        }
        if g.elitism_count >= g.population_size {
            return Err(Error::validation(
                "GaParams.elitism_count",
                "must be below population_size",
            ));
        }
        unit_interval("GaParams.crossover_prob", g.crossover_prob)?;
        if let Some(pm) = g.mutation_prob_per_bit {
            unit_interval("GaParams.mutation_prob_per_bit", pm)?;
        }
        if !(1..=32).contains(&g.bits_per_coordinate) {
            return Err(Error::validation(
                "GaParams.bits_per_coordinate",
                "must lie in [1, 32]",
            ));
        }
        finite(
            "GaParams",
            &[g.uav_alt_min, g.uav_alt_max, g.irs_height, g.penalty_weight],
        )?;
        if g.uav_alt_min < MIN_SAFE_ALTITUDE {
            return Err(Error::validation(
                "GaParams.uav_alt_min",
                format!("must be >= {MIN_SAFE_ALTITUDE} m, got {}", g.uav_alt_min),
            ));
        }
        if g.uav_alt_max < g.uav_alt_min {
            return Err(Error::validation(
                "GaParams.uav_alt_max",
                "must be >= uav_alt_min",
            ));
        }
        if g.irs_height <= 0.0 || g.irs_height >= g.uav_alt_min {
            return Err(Error::validation(
                "GaParams.irs_height",
                "must be positive and below uav_alt_min",
            ));
        }
        if g.penalty_weight < 0.0 {
            return Err(Error::validation("GaParams.penalty_weight", "must be >= 0"));
        }
        if let Some(d) = g.max_displacement_m {
            if !(d > 0.0) {
                return Err(Error::validation(
                    "GaParams.max_displacement_m",
                    "must be positive",
                ));
            }
        }

        let e = &self.experiment;
        if e.seed_count == 0 {
            return Err(Error::validation(
                "ExperimentParams.seed_count",
                "must be >= 1",
            ));
        }
        if let Some(pos) = e.static_irs_position {
            if !self.region.contains(pos) {
                return Err(Error::validation(
                    "ExperimentParams.static_irs_position",
                    "must lie inside the region",
                ));
            }
        }
        Ok(())
    }
}

/// Independent random streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStream {
    Mobility,
    /// GA stream for the scheme with the given index.
    Ga(u64),
    /// Free-form stream for tools and tests.
    Custom(u64),
}

impl SeedStream {
    fn id(self) -> u64 {
        match self {
            SeedStream::Mobility => 1,
            SeedStream::Ga(k) => 0x100 + k,
            SeedStream::Custom(k) => 0x1_0000 + k,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 of the master seed mixed with the stream id.
pub fn sub_seed(master: u64, stream: SeedStream) -> u64 {
    splitmix64(splitmix64(master) ^ stream.id().wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// ChaCha8 generator for one stream. ChaCha8 output and rand's uniform
/// sampling are platform independent, so traces reproduce everywhere.
pub fn stream_rng(master: u64, stream: SeedStream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(master, stream))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seed_only_document_takes_table_defaults() {
        let c = load_config("seed = 7\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.ga.population_size, 50);
        assert_eq!(c.ga.max_iterations, 50);
        assert_eq!(c.num_users, 10);
        assert_eq!(c.power.tx_power_dbm, 36.0);
        assert_eq!(c.power.noise_power_dbm, -80.0);
        assert_eq!(c.power.snr_threshold_db, 20.0);
        assert_eq!(c.region, Region::new(0.0, 0.0, 500.0, 500.0));
        assert_eq!(c.ga.irs_height, 6.0);
    }

    #[test]
    fn inverted_speed_range_names_mobility_params() {
        let err = load_config("[mobility]\nspeed_min = 3.0\nspeed_max = 1.0\n").unwrap_err();
        assert!(err.is_config_error());
        assert!(err.to_string().contains("MobilityParams"), "{err}");
    }

    #[test]
    fn altitude_floor_enforced() {
        let err = load_config("[ga]\nuav_alt_min = 50.0\n").unwrap_err();
        assert!(err.to_string().contains("GaParams.uav_alt_min"), "{err}");
    }

    #[test]
    fn schema_error_reports_line() {
        let err = load_config("seed = 1\n[ga]\npopulation_size = \"lots\"\n").unwrap_err();
        match err {
            Error::Schema { line, .. } => assert_eq!(line, Some(3)),
            other => panic!("unexpected {other}"),
        }
        let err = load_config("seed = 1\nbogus_key = 2\n").unwrap_err();
        assert!(err.to_string().contains("bogus_key"), "{err}");
    }

    #[test]
    fn subregion_outside_region_rejected() {
        let doc = "[mobility.initial_subregion]\nx_min = 480.0\ny_min = 0.0\nx_max = 530.0\ny_max = 50.0\n";
        let err = load_config(doc).unwrap_err();
        assert!(err.to_string().contains("initial_subregion"), "{err}");
    }

    #[test]
    fn derived_snr_and_threshold() {
        let d = derive(&ScenarioConfig::default());
        assert!((d.rho / 10f64.powf(11.6) - 1.0).abs() < 1e-12);
        assert!((d.rho - 3.981_071_705_534_97e11).abs() / d.rho < 1e-12);
        assert!((d.gamma_th - 100.0).abs() < 1e-12);

        let mut c = ScenarioConfig::default();
        c.power.tx_power_dbm = c.power.noise_power_dbm;
        assert_eq!(derive(&c).rho, 1.0);
    }

    #[test]
    fn sub_seeds_differ_per_stream() {
        let a = sub_seed(5, SeedStream::Mobility);
        let b = sub_seed(5, SeedStream::Ga(0));
        let c = sub_seed(6, SeedStream::Mobility);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, sub_seed(5, SeedStream::Mobility));
    }

    #[test]
    fn default_config_round_trips_through_toml() {
        let mut c = ScenarioConfig::default();
        c.ga.mutation_prob_per_bit = Some(0.0123);
        c.experiment.static_irs_position = Some([120.25, 33.0]);
        c.channel.los_model = LosModel::ElevationSigmoid;
        let back = load_config(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    proptest! {
        #[test]
        fn db_linear_round_trip(exp in -15.0f64..15.0) {
            let x = 10f64.powf(exp);
            let back = db_to_linear(linear_to_db(x));
            prop_assert!((back - x).abs() <= 1e-12 * x);
        }

        #[test]
        fn config_round_trip(
            seed in 0u64..(i64::MAX as u64),
            users in 1usize..40,
            a_los in 40.0f64..80.0,
            smin in 0.0f64..2.0,
            extra in 0.0f64..3.0,
            decay in 0.0f64..=1.0,
            bits in 1u32..=32,
        ) {
            let mut c = ScenarioConfig { seed, num_users: users, ..Default::default() };
            c.channel.a_los = a_los;
            c.mobility.speed_min = smin;
            c.mobility.speed_max = smin + extra;
            c.power.ftpa_decay = decay;
            c.ga.bits_per_coordinate = bits;
            let back = load_config(&c.to_toml()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
