//! Frozen outputs checked byte for byte. Set `GIGALINK_BLESS=1` to rewrite
//! the fixtures after an intentional change.

use std::path::PathBuf;

use gigalink::elastic::{simulate_fifo, FifoConfig, FifoStats, WritePattern};
use gigalink::framing::{
    gen_preamble, scrambler_candidates, scrambler_score, Frame, FrameKind, Framer,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn blessing() -> bool {
    std::env::var_os("GIGALINK_BLESS").is_some()
}

fn compare_text(name: &str, actual: &str) {
    let path = fixture(name);
    if blessing() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected =
        std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} changed");
}

#[test]
fn scrambler_score_table() {
    let mut out = String::from("kind,candidate,score\n");
    for kind in FrameKind::ALL {
        let pre = gen_preamble(kind);
        for (i, c) in scrambler_candidates(kind).iter().enumerate() {
            out.push_str(&format!(
                "{kind},{i},{}\n",
                scrambler_score(&pre, c, kind.body_bytes())
            ));
        }
    }
    compare_text("scrambler_scores.csv", &out);
}

#[test]
fn default_fifo_run() {
    let cfg = FifoConfig::default();
    let stats = simulate_fifo(&cfg, 10_000_000, WritePattern::Continuous, 0).unwrap();
    let text = format!("{}\n{}\n", FifoStats::CSV_HEADER, stats.csv_row());
    compare_text("fifo_default_1e7.csv", &text);
    assert!(stats.violations(&cfg, &WritePattern::Continuous).is_empty());
}

#[test]
fn bursty_fifo_run() {
    let cfg = FifoConfig::default();
    let stats = simulate_fifo(&cfg, 1_000_000, WritePattern::Bursty, 17).unwrap();
    let text = format!("{}\n{}\n", FifoStats::CSV_HEADER, stats.csv_row());
    compare_text("fifo_bursty_1e6_seed17.csv", &text);
    assert!(stats.violations(&cfg, &WritePattern::Bursty).is_empty());
}

#[test]
fn zero_payload_frames() {
    for kind in FrameKind::ALL {
        let framer = Framer::new(kind);
        let frame = framer.build(&vec![0u8; kind.payload_bytes()]).unwrap();
        let name = format!("{kind}_zero_payload.bin");
        if blessing() {
            frame.write_file(fixture(&name)).unwrap();
        }
        let stored = Frame::read_file(kind, fixture(&name)).unwrap();
        assert_eq!(stored, frame, "{name}");
        let (payload, corrected) = framer.parse(stored.as_bytes()).unwrap();
        assert_eq!(corrected, 0);
        assert!(payload.iter().all(|&b| b == 0));
    }
}
