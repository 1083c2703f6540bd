use std::path::Path;
use std::process::{Command, Output};

use pcca::io::{decode_pgm, encode_pgm};
use pcca::ModImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pcca(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcca"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_pgm(path: &Path, h: usize, w: usize, g: u64, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let img = ModImage::new(
        (0..h * w).map(|_| rng.gen_range(0..g) as u32).collect(),
        h,
        w,
        g,
    )
    .unwrap();
    let bytes = encode_pgm(&img).unwrap();
    std::fs::write(path, &bytes).unwrap();
    bytes
}

#[test]
fn encrypt_decrypt_preserves_pgm_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for (depth, g) in [("8", 256u64), ("16", 65536)] {
        let original = write_pgm(&dir.path().join("m.pgm"), 12, 9, g, 1);
        for preset in ["lan", "hua_ma"] {
            let common = ["--preset", preset, "--seed", "c0ffee", "--depth", depth];
            let enc = pcca(
                &[&["encrypt"][..], &common, &["-i", "m.pgm", "-o", "c.pgm"]].concat(),
                dir.path(),
            );
            assert_eq!(code(&enc), 0, "{}", String::from_utf8_lossy(&enc.stderr));
            let dec = pcca(
                &[&["decrypt"][..], &common, &["-i", "c.pgm", "-o", "d.pgm"]].concat(),
                dir.path(),
            );
            assert_eq!(code(&dec), 0, "{}", String::from_utf8_lossy(&dec.stderr));
            assert_eq!(std::fs::read(dir.path().join("d.pgm")).unwrap(), original);
        }
    }
}

#[test]
fn keygen_material_matches_seeded_encryption() {
    let dir = tempfile::tempdir().unwrap();
    write_pgm(&dir.path().join("m.pgm"), 8, 8, 256, 2);
    let key = ["--preset", "cosine", "--seed", "01"];
    assert_eq!(
        code(&pcca(
            &[
                &["keygen"][..],
                &key,
                &["--height", "8", "--width", "8", "-o", "k.json"]
            ]
            .concat(),
            dir.path()
        )),
        0
    );
    assert_eq!(
        code(&pcca(
            &[&["encrypt"][..], &key, &["-i", "m.pgm", "-o", "a.pgm"]].concat(),
            dir.path()
        )),
        0
    );
    let via_material = [
        "encrypt",
        "--preset",
        "cosine",
        "--material",
        "k.json",
        "-i",
        "m.pgm",
        "-o",
        "b.pgm",
    ];
    assert_eq!(code(&pcca(&via_material, dir.path())), 0);
    assert_eq!(
        std::fs::read(dir.path().join("a.pgm")).unwrap(),
        std::fs::read(dir.path().join("b.pgm")).unwrap()
    );
}

#[test]
fn recover_zhou_64x64_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let original = write_pgm(&dir.path().join("m.pgm"), 64, 64, 256, 3);
    let key = ["--preset", "zhou", "--seed", "5eed"];
    assert_eq!(
        code(&pcca(
            &[&["encrypt"][..], &key, &["-i", "m.pgm", "-o", "c.pgm"]].concat(),
            dir.path()
        )),
        0
    );
    let build = pcca(
        &[
            &["build-atoms"][..],
            &key,
            &[
                "--height", "64", "--width", "64", "--atoms", "z.atoms", "--jobs", "4",
            ],
        ]
        .concat(),
        dir.path(),
    );
    assert_eq!(
        code(&build),
        0,
        "{}",
        String::from_utf8_lossy(&build.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&build.stdout).unwrap();
    assert_eq!(report["queries"], 4097);
    let rec = pcca(
        &[
            "recover", "--atoms", "z.atoms", "-i", "c.pgm", "-o", "r.pgm",
        ],
        dir.path(),
    );
    assert_eq!(code(&rec), 0);
    let report: serde_json::Value = serde_json::from_slice(&rec.stdout).unwrap();
    assert_eq!(report["queries"], 0);
    assert_eq!(std::fs::read(dir.path().join("r.pgm")).unwrap(), original);
    assert_eq!(decode_pgm(&original).unwrap().dims(), (64, 64));
}

#[test]
fn fixture_transcript_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("# recorded oracle answers\n");
    for (i, answer) in pcca::worked_example::ORACLE_ANSWERS.iter().enumerate() {
        let mut c = vec![0u32; 9];
        if i > 0 {
            c[i - 1] = 1;
        }
        let csv = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
        text.push_str(&format!("{} -> {}\n", csv(&c), csv(answer)));
    }
    std::fs::write(dir.path().join("t.txt"), text).unwrap();
    std::fs::write(
        dir.path().join("c.csv"),
        "29,67,144,143,74,127,101,24,139\n",
    )
    .unwrap();
    let build = pcca(
        &[
            "build-atoms",
            "--fixture",
            "t.txt",
            "--atoms",
            "f.atoms",
            "--sparse",
        ],
        dir.path(),
    );
    assert_eq!(
        code(&build),
        0,
        "{}",
        String::from_utf8_lossy(&build.stderr)
    );
    assert_eq!(
        code(&pcca(
            &["recover", "--atoms", "f.atoms", "-i", "c.csv", "-o", "m.csv"],
            dir.path()
        )),
        0
    );
    assert_eq!(
        std::fs::read_to_string(dir.path().join("m.csv")).unwrap(),
        "0,15,33,47,65,165,56,96,255\n"
    );
}

#[test]
fn demo_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = pcca(&["demo"], dir.path());
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("{171,255,61,116,63,191,203,242,62}"));
    assert!(text.contains("{0,15,33,47,65,165,56,96,255}"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write_pgm(&dir.path().join("m.pgm"), 4, 4, 256, 4);
    std::fs::write(dir.path().join("junk.pgm"), b"P2\n1 1\n255\n0").unwrap();
    let enc = |extra: &[&str]| {
        pcca(
            &[&["encrypt", "--seed", "01", "-o", "o.pgm"][..], extra].concat(),
            dir.path(),
        )
    };
    assert_eq!(code(&pcca(&["no-such-command"], dir.path())), 2);
    assert_eq!(code(&enc(&["--preset", "nope", "-i", "m.pgm"])), 2);
    assert_eq!(code(&enc(&["-i", "junk.pgm"])), 3);
    assert_eq!(code(&enc(&["--depth", "16", "-i", "m.pgm"])), 4);
    assert_eq!(code(&enc(&["-i", "missing.pgm"])), 1);
    let check = pcca(&["check", "--preset", "xor_control"], dir.path());
    assert_eq!(code(&check), 5);
    let check = pcca(&["check", "--preset", "zhou"], dir.path());
    assert_eq!(code(&check), 0);
    assert_eq!(String::from_utf8(check.stdout).unwrap().lines().count(), 4);
}
