use std::fs;
use std::path::Path;
use std::process::Command;

use ncdft::audio::write_wav;
use ncdft::cli::run_with;
use ncdft::PcmStream;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Output {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let argv = std::iter::once("ncdft").chain(args.iter().copied());
    let code = run_with(argv, &mut stdout, &mut stderr);
    Output {
        code,
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn plan_lists_the_default_bank() {
    let out = run(&["plan"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines.len(), 193);
    assert!(lines[0].split_whitespace().eq([
        "index",
        "f_center",
        "f_quantized",
        "N",
        "M",
        "f_left",
        "f_right",
        "W_NC",
        "variable_q"
    ]));
    let last: Vec<&str> = lines[192].split_whitespace().collect();
    assert_eq!(last[0], "191");
    let f: f64 = last[1].parse().unwrap();
    assert!((f - 6839.6).abs() < 0.1, "{f}");
    let a4: Vec<&str> = lines[97].split_whitespace().collect();
    assert_eq!(&a4[..5], ["96", "440.0000", "440.0210", "1909", "35"]);
    assert_eq!(lines[1].split_whitespace().nth(8), Some("true"));
    assert_eq!(last[8], "false");
}

#[test]
fn plan_matches_golden_output() {
    assert_eq!(run(&["plan"]).stdout, golden("plan_default.txt"));
    let small = run(&[
        "--octaves",
        "2",
        "--bins-per-octave",
        "12",
        "--start-note",
        "57",
        "plan",
    ]);
    assert_eq!(small.stdout, golden("plan_a3_2x12.txt"));
}

#[test]
fn sweep_reports_the_bin_width() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("a4.csv");
    let rect = dir.path().join("rect.csv");
    let out = run(&[
        "sweep",
        "--bin-index",
        "96",
        "--span",
        "120",
        "--baseline",
        "rectangular",
        "--out",
        csv.to_str().unwrap(),
        "--baseline-out",
        rect.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);

    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("frequency_hz,relative_magnitude"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (f, m) = l.split_once(',').unwrap();
            (f.parse().unwrap(), m.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 1000);
    assert_eq!(rows.iter().map(|r| r.1).fold(0.0, f64::max), 1.0);
    let step = rows[1].0 - rows[0].0;
    let inside: Vec<f64> = rows.iter().filter(|r| r.1 > 1e-4).map(|r| r.0).collect();
    let width = inside.last().unwrap() - inside.first().unwrap();
    let expected = 48_000.0 / 1909.0;
    assert!(
        (width - expected).abs() <= 2.0 * step,
        "{width} vs {expected}"
    );

    let reported: f64 = out
        .stderr
        .lines()
        .find_map(|l| l.strip_prefix("support width "))
        .and_then(|l| l.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((reported - expected).abs() <= step, "{}", out.stderr);
    assert!(out.stderr.contains("rectangular main lobe"));
    assert!(fs::read_to_string(&rect).unwrap().lines().count() == 1001);
}

#[test]
fn sweep_output_is_deterministic() {
    let args = [
        "sweep",
        "--bin-index",
        "150",
        "--steps",
        "200",
        "--source",
        "oracle",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
    assert_eq!(a.stdout.lines().count(), 201);
}

#[test]
fn analyze_silence_gives_zero_csv() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("silence.wav");
    write_wav(&PcmStream::new(48_000, 1, vec![0; 48_000]).unwrap(), &wav).unwrap();
    let out = run(&["analyze", wav.to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let mut lines = out.stdout.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("time_s,27.5000,"));
    assert_eq!(header.split(',').count(), 193);
    let rows: Vec<&str> = lines.collect();
    assert!((59..=61).contains(&rows.len()), "{}", rows.len());
    for row in rows {
        assert!(row.split(',').skip(1).all(|v| v == "0"), "{row}");
    }
}

#[test]
fn analyze_writes_pgm_file() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("tone.wav");
    let pgm = dir.path().join("tone.pgm");
    let x = ncdft::oracle::tone(1000.0, 44_100.0, 22_050, 20_000.0);
    write_wav(&PcmStream::new(44_100, 1, x).unwrap(), &wav).unwrap();
    let out = run(&[
        "--octaves",
        "6",
        "analyze",
        wav.to_str().unwrap(),
        "--format",
        "pgm",
        "--frame-rate",
        "20",
        "--out",
        pgm.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.is_empty());
    let bytes = fs::read(&pgm).unwrap();
    let text = String::from_utf8_lossy(&bytes[..16]);
    let mut fields = text.split_ascii_whitespace();
    assert_eq!(fields.next(), Some("P5"));
    let width: usize = fields.next().unwrap().parse().unwrap();
    assert_eq!(fields.next(), Some("144"));
    assert_eq!(fields.next(), Some("255"));
    // Half a second at roughly 20 frames per second.
    assert!((9..=10).contains(&width), "{width}");
    let header = format!("P5\n{width} 144\n255\n");
    assert_eq!(bytes.len(), header.len() + width * 144);
}

#[test]
fn bench_prints_rates() {
    let out = run(&[
        "--octaves",
        "4",
        "bench",
        "--seconds",
        "0.05",
        "--bins",
        "48",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let keys: Vec<&str> = out
        .stdout
        .lines()
        .map(|l| l.split(':').next().unwrap())
        .collect();
    assert_eq!(
        keys,
        [
            "bins",
            "samples",
            "elapsed_s",
            "samples_per_second",
            "us_per_sample",
            "realtime_factor"
        ]
    );
    assert!(out.stdout.starts_with("bins: 48\nsamples: 2400\n"));
}

#[test]
fn errors_are_one_line_and_nonzero() {
    let cases: [(&[&str], i32, &str); 8] = [
        (&["plan", "--frobnicate"], 2, "--frobnicate"),
        (&["teleport"], 2, "teleport"),
        (&["--bins-per-octave", "many", "plan"], 2, "many"),
        (
            &["analyze", "/nonexistent/input.wav"],
            1,
            "/nonexistent/input.wav",
        ),
        (&["--octaves", "10", "plan"], 1, "Nyquist"),
        (&["bench", "--bins", "100"], 1, "--bins 100"),
        (&["sweep", "--bin-index", "500"], 1, "--bin-index 500"),
        (&["sweep", "--steps", "10"], 1, "100 steps"),
    ];
    for (args, code, needle) in cases {
        let out = run(args);
        assert_eq!(out.code, code, "{args:?}: {}", out.stderr);
        assert_eq!(out.stderr.lines().count(), 1, "{args:?}: {}", out.stderr);
        assert!(out.stderr.contains(needle), "{args:?}: {}", out.stderr);
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn bad_wav_names_the_chunk() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("float.wav");
    let mut bytes = ncdft::audio::encode_wav(&PcmStream::new(48_000, 1, vec![0; 16]).unwrap());
    bytes[20] = 3; // IEEE float format code
    fs::write(&wav, bytes).unwrap();
    let out = run(&["analyze", wav.to_str().unwrap()]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("fmt "), "{}", out.stderr);
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_ncdft");
    let help = Command::new(exe).arg("--help").output().unwrap();
    assert!(help.status.success());
    assert!(String::from_utf8_lossy(&help.stdout).contains("analyze"));
    let plan = Command::new(exe)
        .args(["--octaves", "1", "plan"])
        .output()
        .unwrap();
    assert!(plan.status.success());
    assert_eq!(String::from_utf8_lossy(&plan.stdout).lines().count(), 25);
    let bad = Command::new(exe).arg("--nope").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
