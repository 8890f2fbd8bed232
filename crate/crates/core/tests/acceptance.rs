//! Acceptance checks, one line per criterion.
//!
//! Runs as a plain binary so the lines reach the terminal in order; any
//! failing criterion makes the process exit nonzero.

use std::time::{Duration, Instant};

use gigalink::channel::{self, LinkBudget};
use gigalink::elastic::{simulate_fifo, FifoConfig, WritePattern};
use gigalink::harness::{self, Sweep, SweepParam};
use gigalink::rs;
use gigalink::sync;
use gigalink::{run_link, ChannelModel, Execution, ExperimentConfig, FrameKind};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    check(t < limit, format!("took {t:.2?}, limit {limit:?}"))
}

fn sync_tradeoff() -> Outcome {
    let start = Instant::now();
    let r32 = sync::tradeoff_table(FrameKind::P32, 1e-4, [28]).map_err(|e| e.to_string())?[0];
    let r64 = sync::tradeoff_table(FrameKind::P64, 1e-4, [55]).map_err(|e| e.to_string())?[0];
    within_time(start, Duration::from_secs(1))?;
    let (pm, pf1, pf2, pm64) = (
        r32.p_miss.log10(),
        r32.p_false_single.log10(),
        r32.p_false_double.log10(),
        r64.p_miss.log10(),
    );
    check((pm + 14.0).abs() <= 1.0, format!("log10 Pm = {pm:.3}"))?;
    check((pf1 + 5.0).abs() <= 0.5, format!("log10 PF1 = {pf1:.3}"))?;
    check((pf2 + 10.0).abs() <= 1.0, format!("log10 PF2 = {pf2:.3}"))?;
    check(
        (pm64 + 29.0).abs() <= 1.0,
        format!("log10 Pm(64, 55) = {pm64:.3}"),
    )?;
    Ok(format!(
        "N=32 g=28: Pm={:.2e} PF1={:.2e} PF2={:.2e}; N=64 g=55: Pm={:.2e}",
        r32.p_miss, r32.p_false_single, r32.p_false_double, r64.p_miss
    ))
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn binomial_rational(n: u64, k: u64) -> BigRational {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    BigRational::from_integer(c)
}

/// P(at least n - gamma + 1 of n bits flip) with exact arithmetic.
fn exact_single_miss(n: u64, gamma: u64, p: &BigRational) -> BigRational {
    let q = BigRational::one() - p;
    let mut sum = BigRational::zero();
    for i in (n - gamma + 1)..=n {
        sum += binomial_rational(n, i)
            * num_traits::pow(p.clone(), i as usize)
            * num_traits::pow(q.clone(), (n - i) as usize);
    }
    sum
}

fn agrees(got: f64, want: &BigRational) -> bool {
    if want.is_zero() {
        return got == 0.0;
    }
    let rel = ((rational(got) - want) / want).abs();
    rel < BigRational::new(BigInt::from(5), BigInt::from(10u64.pow(13)))
}

fn binomial_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xB1A5);
    let mut cases = 0;
    for n in 1..=16usize {
        let pattern: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        // counts[k] = windows agreeing with the pattern in exactly k bits
        let mut counts = vec![0u64; n + 1];
        for w in 0u32..(1 << n) {
            let agree = (0..n)
                .filter(|&b| ((w >> b) & 1) as u8 == pattern[b])
                .count();
            counts[agree] += 1;
        }
        for gamma in 0..=n {
            let hits: u64 = counts[gamma..].iter().sum();
            let want = hits as f64 / (1u64 << n) as f64;
            let (single, double) = sync::p_false(n, gamma).map_err(|e| e.to_string())?;
            check(
                single == want,
                format!("p_false({n}, {gamma}) = {single}, enumeration {want}"),
            )?;
            check(
                double == want * want,
                format!("double p_false({n}, {gamma})"),
            )?;
            for p in [0.1, 0.25] {
                let pr = rational(p);
                let m = exact_single_miss(n as u64, gamma as u64, &pr);
                let one = BigRational::one();
                let bank = &one - (&one - &m) * (&one - &m);
                let got_single = sync::p_miss_single(n, gamma, p).map_err(|e| e.to_string())?;
                let got_bank = sync::p_miss(n, gamma, p).map_err(|e| e.to_string())?;
                check(
                    agrees(got_single, &m),
                    format!(
                        "p_miss_single({n}, {gamma}, {p}) = {got_single:e}, exact {:e}",
                        m.to_f64().unwrap()
                    ),
                )?;
                check(
                    agrees(got_bank, &bank),
                    format!(
                        "p_miss({n}, {gamma}, {p}) = {got_bank:e}, exact {:e}",
                        bank.to_f64().unwrap()
                    ),
                )?;
                cases += 1;
            }
        }
    }
    within_time(start, Duration::from_secs(10))?;
    Ok(format!("{cases} (N, gamma, p) cases exact"))
}

fn monte_carlo_sync() -> Outcome {
    let start = Instant::now();
    let trials = 200_000u64;
    let misses = sync::simulate_single_miss(
        FrameKind::P32,
        28,
        0.05,
        trials,
        0x5EED,
        Execution::Parallel,
    )
    .map_err(|e| e.to_string())?;
    within_time(start, Duration::from_secs(30))?;
    let analytic = sync::p_miss_single(32, 28, 0.05).map_err(|e| e.to_string())?;
    let rate = misses as f64 / trials as f64;
    let se = (analytic * (1.0 - analytic) / trials as f64).sqrt();
    let z = (rate - analytic) / se;
    check(
        z.abs() <= 3.0,
        format!("rate {rate:.5} vs analytic {analytic:.5}, z = {z:.2}"),
    )?;
    Ok(format!(
        "rate {rate:.5}, analytic {analytic:.5}, z = {z:+.2}"
    ))
}

fn modem_fidelity() -> Outcome {
    let start = Instant::now();
    let mut detail = Vec::new();
    for (i, ebn0) in [6.0, 8.0, 10.0].into_iter().enumerate() {
        let cfg = ExperimentConfig::new(
            FrameKind::P32,
            ChannelModel::Awgn { ebn0_db: ebn0 },
            25_000,
            600 + i as u64,
        );
        let r = run_link(&cfg).map_err(|e| e.to_string())?;
        let theory = 0.5 * (-(10f64.powf(ebn0 / 10.0))).exp();
        let rel = r.raw_ber() / theory - 1.0;
        check(r.raw_bits >= 10_000_000, format!("{} bits", r.raw_bits))?;
        check(
            rel.abs() <= 0.15,
            format!("{ebn0} dB: BER {:.3e} vs {theory:.3e}", r.raw_ber()),
        )?;
        detail.push(format!("{ebn0} dB {:+.1}%", rel * 100.0));
    }
    within_time(start, Duration::from_secs(120))?;
    Ok(detail.join(", "))
}

fn rs_guarantee() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x2559);
    let mut by_weight = [0u32; rs::T + 1];
    for trial in 0..100_000 {
        let msg: Vec<u8> = (0..rs::K).map(|_| rng.random()).collect();
        let mut word = rs::encode(&msg).map_err(|e| e.to_string())?.0;
        let weight = rng.random_range(0..=rs::T);
        for pos in index::sample(&mut rng, rs::N, weight) {
            word[pos] ^= rng.random_range(1..=255u8);
        }
        by_weight[weight] += 1;
        match rs::decode(&word) {
            Ok(d) if d.message == msg && d.corrected == weight => {}
            Ok(d) => {
                return Err(format!(
                    "trial {trial}: wrong result, {} corrections for weight {weight}",
                    d.corrected
                ))
            }
            Err(e) => return Err(format!("trial {trial}: weight {weight}: {e}")),
        }
    }
    within_time(start, Duration::from_secs(60))?;
    Ok(format!(
        "100000 decodes, weights 0..=8 each seen >= {} times",
        by_weight.iter().min().unwrap()
    ))
}

fn frame_round_trip() -> Outcome {
    let start = Instant::now();
    let mut frames = 0;
    for kind in FrameKind::ALL {
        for offset in 0..8 {
            let mut cfg =
                ExperimentConfig::new(kind, ChannelModel::Noiseless, 625, 7000 + offset as u64);
            cfg.gamma = kind.default_gamma();
            cfg.bit_offset = Some(offset);
            let r = run_link(&cfg).map_err(|e| e.to_string())?;
            let tag = format!("{kind} offset {offset}");
            check(
                r.coded_bit_errors == 0 && r.raw_bit_errors == 0,
                format!("{tag}: bit errors"),
            )?;
            check(
                r.frame_errors == 0 && r.frames_lost == 0,
                format!("{tag}: {} frame errors", r.frame_errors),
            )?;
            check(
                r.misaligned_frames == 0 && r.sync_losses == 0,
                format!("{tag}: sync misplaced frames"),
            )?;
            check(
                r.coded_bits == r.frames * kind.payload_bytes() as u64 * 8,
                format!("{tag}: only {} payload bits delivered", r.coded_bits),
            )?;
            frames += r.frames;
        }
    }
    within_time(start, Duration::from_secs(60))?;
    check(frames == 10_000, format!("{frames} frames"))?;
    Ok(format!("{frames} frames located and decoded bit-exact"))
}

fn rate_arithmetic() -> Outcome {
    let r32 = FrameKind::P32.source_rate_bps() / 1e6;
    let r64 = FrameKind::P64.source_rate_bps() / 1e6;
    check((r32 - 804.33).abs() <= 0.01, format!("P32 rate {r32}"))?;
    check((r64 - 807.43).abs() <= 0.01, format!("P64 rate {r64}"))?;
    check((r32 - 875.0 * 239.0 / 260.0).abs() < 1e-9, "P32 ratio")?;
    check((r64 - 875.0 * 478.0 / 518.0).abs() < 1e-9, "P64 ratio")?;
    let spans = (FrameKind::P32.span_bytes(), FrameKind::P64.span_bytes());
    check(spans == (264, 526), format!("spans {spans:?}"))?;
    Ok(format!(
        "{r32:.2} / {r64:.2} Mbps, spans {} / {} bytes",
        spans.0, spans.1
    ))
}

fn elastic_buffer() -> Outcome {
    let start = Instant::now();
    let cfg = FifoConfig::default();
    let s =
        simulate_fifo(&cfg, 100_000_000, WritePattern::Continuous, 0).map_err(|e| e.to_string())?;
    within_time(start, Duration::from_secs(30))?;
    check(
        s.overflow_events == 0 && s.underflow_events == 0,
        format!(
            "{} overflows, {} underflows",
            s.overflow_events, s.underflow_events
        ),
    )?;
    check(
        s.output_gaps_after_priming == 0,
        format!("{} output gaps", s.output_gaps_after_priming),
    )?;
    check(
        s.read_cycles == 100_000_000,
        format!("{} read cycles", s.read_cycles),
    )?;
    check(
        s.bytes_written == s.output_bytes + s.final_occupancy as u64,
        format!(
            "{} written != {} read + {} held",
            s.bytes_written, s.output_bytes, s.final_occupancy
        ),
    )?;
    Ok(format!(
        "occupancy {}..={} after priming, {} stop signals, {} bytes out",
        s.min_occupancy_after_priming,
        s.max_occupancy_after_priming,
        s.stop_assertions,
        s.output_bytes
    ))
}

fn link_budget() -> Outcome {
    let start = Instant::now();
    let b = LinkBudget::default();
    let snr = |d: f64| channel::snr_at_distance(&b, d).map_err(|e| e.to_string());
    let mut prev = f64::INFINITY;
    for step in 1..=400 {
        let s = snr(step as f64 * 0.25)?;
        check(
            s < prev,
            format!("SNR not decreasing at {} m", step as f64 * 0.25),
        )?;
        prev = s;
    }
    for d in [1.0, 2.5, 7.0, 30.0, 55.0] {
        let drop = snr(d)? - snr(2.0 * d)?;
        check(
            (drop - 6.02).abs() <= 0.01,
            format!("doubling from {d} m loses {drop:.4} dB"),
        )?;
    }
    let snr30 = snr(30.0)?;
    let coded = channel::rs_residual_ber(channel::dbpsk_ber_theory(snr30));
    within_time(start, Duration::from_secs(1))?;
    check(coded < 1e-6, format!("coded BER at 30 m = {coded:e}"))?;
    Ok(format!(
        "Eb/N0 at 30 m {snr30:.2} dB, predicted coded BER {coded:.1e}"
    ))
}

fn determinism() -> Outcome {
    let budget = LinkBudget::default();
    let sweeps = [
        (
            ChannelModel::Awgn { ebn0_db: 0.0 },
            SweepParam::Ebn0,
            vec![4.0, 6.0, 8.0, 10.0],
        ),
        (
            ChannelModel::Bsc { p: 0.0 },
            SweepParam::P,
            vec![1e-3, 5e-3, 2e-2],
        ),
        (
            ChannelModel::Distance {
                meters: 1.0,
                budget,
            },
            SweepParam::Distance,
            vec![5.0, 40.0, 120.0],
        ),
        (
            ChannelModel::Awgn { ebn0_db: 7.0 },
            SweepParam::Gamma,
            vec![24.0, 28.0, 31.0],
        ),
    ];
    for (channel, param, values) in sweeps {
        let mut cfg = ExperimentConfig::new(FrameKind::P32, channel, 200, 0xD00D);
        cfg.sweep = Some(Sweep { param, values });
        let run = |exec: Execution| {
            let mut c = cfg.clone();
            c.execution = exec;
            harness::sweep(&c)
                .map(|rows| harness::sweep_csv(&rows))
                .map_err(|e| e.to_string())
        };
        let a = run(Execution::Parallel)?;
        let b = run(Execution::Parallel)?;
        let c = run(Execution::Sequential)?;
        check(a == b, format!("{param} sweep differs between runs"))?;
        check(
            a == c,
            format!("{param} sweep differs between execution modes"),
        )?;
    }
    Ok("ebn0, p, distance and gamma sweeps byte-identical across runs and modes".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("sync trade-off reproduction", sync_tradeoff),
        ("binomial-tail oracle equivalence", binomial_oracle),
        ("Monte Carlo / analytic sync agreement", monte_carlo_sync),
        ("DBPSK modem fidelity", modem_fidelity),
        ("RS guarantee", rs_guarantee),
        ("frame round trip", frame_round_trip),
        ("rate arithmetic", rate_arithmetic),
        ("elastic buffer", elastic_buffer),
        ("link budget properties", link_budget),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} [{t:.2?}]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{t:.2?}]: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
