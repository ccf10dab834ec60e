use std::path::PathBuf;

use abc_cli::config::parse_pairs;
use abc_cli::{AcceptProbSource, CliError, Overrides, RunConfig, SamplerKind};

const BASE: &str = "
# a comment line
model = toy
sampler = self-calibrated   # trailing comment
n = 500
epsilon = 0.09
seed = 17
";

fn parse(text: &str) -> Result<RunConfig, CliError> {
    RunConfig::from_text(text, &Overrides::default())
}

#[test]
fn parses_with_defaults() {
    let c = parse(BASE).unwrap();
    assert_eq!(c.sampler, SamplerKind::SelfCalibrated);
    assert_eq!((c.n, c.seed, c.epsilon), (500, 17, Some(0.09)));
    assert_eq!((c.rho_stop, c.shrink_factor, c.max_iters), (0.1, 0.5, 200));
    assert_eq!(c.prior_halfwidth, 10.0);
    assert_eq!(c.accept_prob, AcceptProbSource::Oracle);
    assert_eq!(c.replicates, 1);
}

#[test]
fn overrides_win_over_the_file() {
    let ov = Overrides {
        seed: Some(99),
        workers: Some(3),
        output: Some(PathBuf::from("elsewhere")),
    };
    let c = RunConfig::from_text(&format!("{BASE}workers = 8\noutput = here\n"), &ov).unwrap();
    assert_eq!((c.seed, c.workers), (99, 3));
    assert_eq!(c.output, PathBuf::from("elsewhere"));
}

#[test]
fn seed_is_mandatory() {
    let err = parse("sampler = reject\nepsilon = 1\n").unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("seed"));
}

#[test]
fn rejects_malformed_files() {
    for text in [
        "seed = 1\nsampler = reject\nepsilon = 1\nepsilon = 2\n",
        "seed = 1\nsampler = reject\nepsilno = 1\n",
        "seed = 1\nsampler = reject\nepsilon\n",
        "seed = one\nsampler = reject\nepsilon = 1\n",
    ] {
        let err = parse(text).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{text}: {err}");
    }
}

#[test]
fn rejects_out_of_range_values() {
    for extra in [
        "rho_stop = 0",
        "rho_stop = 1.5",
        "shrink_factor = 1",
        "n = 1",
        "workers = 0",
        "prior_halfwidth = -1",
        "epsilon = -0.1",
        "quantile = 0.5",
        "accept_prob_source = estimate:10",
        "model = honeybee",
    ] {
        let base = BASE.replace("epsilon = 0.09\n", "");
        let eps = if extra.starts_with("epsilon") { "" } else { "epsilon = 0.09\n" };
        let text = format!("{base}{eps}{extra}\n");
        assert!(parse(&text).is_err(), "accepted `{extra}`");
    }
}

#[test]
fn sampler_specific_requirements() {
    assert!(parse("seed = 1\nsampler = reject\n").is_err());
    assert!(parse("seed = 1\nsampler = reject\nepsilon = 1\nquantile = 0.1\n").is_err());
    assert!(parse("seed = 1\nsampler = reject\nquantile = 0.1\n").is_ok());
    assert!(parse("seed = 1\nsampler = naive-smc\n").is_err());
    assert!(parse("seed = 1\nsampler = naive-smc\nschedule = 1, 2\n").is_err());
    let c = parse("seed = 1\nsampler = naive-smc\nschedule = 2, 1, 0.5\n").unwrap();
    assert_eq!(c.schedule, vec![2.0, 1.0, 0.5]);
    assert_eq!(c.target_epsilon(), Some(0.5));
    assert!(parse("seed = 1\nsampler = mcmc\n").is_err());
}

#[test]
fn echo_leaves_out_workers_and_output() {
    let c = parse(&format!("{BASE}workers = 4\noutput = somewhere\n")).unwrap();
    let echo = c.echo();
    assert!(!echo.contains_key("workers") && !echo.contains_key("output"));
    assert_eq!(echo["epsilon"], "0.09");
}

#[test]
fn pair_parser_keeps_values_verbatim() {
    let m = parse_pairs("schedule = 1.0, 0.5  # comment\n").unwrap();
    assert_eq!(m["schedule"], "1.0, 0.5");
}
