use std::collections::HashSet;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use sidr::finetune::{fine_tune, TrainConfig};
use sidr::io::{load_dataset, read_layout, write_layout};
use sidr::sim::{simulate_interaction, BenchmarkConfig};
use sidr::{project, EmbeddingHead, MdsConfig, Method, RngSeed, TripletConfig};

fn sidr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sidr")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = sidr(args);
    assert!(out.status.success(), "sidr {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn gen(dir: &Path, extra: &[&str]) {
    let mut args = vec!["gen-benchmark", "--out-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    ok(&args);
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn gen_benchmark_shape_and_determinism() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    gen(a.path(), &[]);
    gen(b.path(), &[]);
    for f in ["features.csv", "labels_primary.csv", "labels_secondary.csv"] {
        assert_eq!(read(a.path().join(f)), read(b.path().join(f)), "{f}");
    }
    let text = String::from_utf8(read(a.path().join("features.csv"))).unwrap();
    assert_eq!(text.lines().count(), 41);
    assert!(text.starts_with("id,f0,f1,"));
    assert_eq!(BenchmarkConfig::default().n_per_cell * 4, 40);

    let c = tempfile::tempdir().unwrap();
    gen(c.path(), &["--noise", "0", "--d", "2"]);
    let text = String::from_utf8(read(c.path().join("features.csv"))).unwrap();
    let rows: HashSet<&str> = text.lines().skip(1).map(|l| l.split_once(',').unwrap().1).collect();
    assert_eq!(rows.len(), 4);
}

#[test]
fn project_matches_library_and_scores() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), &[]);
    let features = dir.path().join("features.csv");
    let labels = dir.path().join("labels_primary.csv");
    let out = dir.path().join("layout.csv");
    let run = ok(&[
        "project",
        "--features", features.to_str().unwrap(),
        "--labels", labels.to_str().unwrap(),
        "--out", out.to_str().unwrap(),
    ]);
    let (fm, _) = load_dataset(&features, None).unwrap();
    let mut want = Vec::new();
    write_layout(&project(&fm, None, &MdsConfig::default()).unwrap(), &mut want).unwrap();
    assert_eq!(read(&out), want);

    let stdout = String::from_utf8(run.stdout).unwrap();
    let value = |key: &str| -> f64 {
        stdout.lines().find_map(|l| l.strip_prefix(key)).unwrap().trim().parse().unwrap()
    };
    assert_eq!(value("adjusted"), 2.0 * value("silhouette"));

    // layout on stdout, score on stderr
    let run = ok(&["project", "--features", features.to_str().unwrap()]);
    assert_eq!(run.stdout, want);
}

#[test]
fn project_with_checkpoint_matches_in_process() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), &[]);
    let features = dir.path().join("features.csv");
    let (fm, labels) = load_dataset(&features, Some(&dir.path().join("labels_secondary.csv"))).unwrap();
    let spec = simulate_interaction(&labels.unwrap(), 4, Method::Triplet, RngSeed(2)).unwrap();
    let head = fine_tune(
        &EmbeddingHead::new(fm.d(), RngSeed(0)),
        &fm,
        &spec,
        &TripletConfig::default(),
        &TrainConfig::default(),
    )
    .unwrap()
    .head;
    let ck = dir.path().join("head.json");
    head.save(&ck).unwrap();
    let run = ok(&["project", "--features", features.to_str().unwrap(), "--head", ck.to_str().unwrap()]);
    let mut want = Vec::new();
    write_layout(&project(&fm, Some(&head), &MdsConfig::default()).unwrap(), &mut want).unwrap();
    assert_eq!(run.stdout, want);
}

#[test]
fn project_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("dup.csv");
    std::fs::write(&f, "id,f0,f1\nimg_1,0,1\nimg_2,1,0\nimg_1,2,2\n").unwrap();
    let out = sidr(&["project", "--features", f.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("img_1"), "{err}");
    assert!(!sidr(&["project", "--features", "/no/such/file.csv"]).status.success());
}

#[test]
fn simulate_writes_reports_deterministically() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = |d: &Path| {
        vec![
            "simulate".to_owned(),
            "--out-dir".into(), d.to_str().unwrap().into(),
            "--methods".into(), "wmds_inverse,mds_inverse,triplet".into(),
            "--k".into(), "2,4".into(),
            "--reps".into(), "2".into(),
            "--seed".into(), "7".into(),
        ]
    };
    let run = |d: &Path| ok(&args(d).iter().map(String::as_str).collect::<Vec<_>>());
    run(a.path());
    run(b.path());
    for f in ["report.csv", "aggregates.csv", "scores.svg"] {
        assert_eq!(read(a.path().join(f)), read(b.path().join(f)), "{f}");
    }
    let report = String::from_utf8(read(a.path().join("report.csv"))).unwrap();
    assert_eq!(report.lines().next(), Some("method,k,repetition,seed,adjusted_score"));
    assert_eq!(report.lines().count(), 1 + 3 * 2 * 2);
    let agg = String::from_utf8(read(a.path().join("aggregates.csv"))).unwrap();
    assert_eq!(agg.lines().next(), Some("method,k,mean,std"));
}

#[test]
fn simulate_config_file_and_k1_triplet_rejection() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"methods":["mds_inverse"],"k_values":[3],"repetitions":1,"seed":5}"#).unwrap();
    let out_dir = dir.path().join("out");
    ok(&["simulate", "--config", cfg.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    let report = String::from_utf8(read(out_dir.join("report.csv"))).unwrap();
    assert_eq!(report.lines().count(), 2);
    assert!(report.lines().nth(1).unwrap().starts_with("mds_inverse,3,0,"));

    let out = sidr(&["simulate", "--out-dir", out_dir.to_str().unwrap(), "--k", "1", "--methods", "triplet"]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("k ≥ 2"), "{err}");
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

/// Minimal HTTP/1.1 client: one request per connection.
fn http(port: u16, method: &str, path: &str, content_type: &str, body: &[u8]) -> std::io::Result<(u16, Vec<u8>)> {
    let mut s = TcpStream::connect(("127.0.0.1", port))?;
    s.set_read_timeout(Some(Duration::from_secs(60)))?;
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\n\r\n",
        body.len()
    )?;
    s.write_all(body)?;
    let mut raw = Vec::new();
    s.read_to_end(&mut raw)?;
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").expect("header end");
    let head = String::from_utf8_lossy(&raw[..split]).to_string();
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    let mut body = raw[split + 4..].to_vec();
    if head.to_ascii_lowercase().contains("transfer-encoding: chunked") {
        body = dechunk(&body);
    }
    Ok((status, body))
}

fn dechunk(mut b: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    loop {
        let eol = b.windows(2).position(|w| w == b"\r\n").unwrap();
        let len = usize::from_str_radix(std::str::from_utf8(&b[..eol]).unwrap().trim(), 16).unwrap();
        if len == 0 {
            return out;
        }
        out.extend_from_slice(&b[eol + 2..eol + 2 + len]);
        b = &b[eol + 4 + len..];
    }
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn start_server(port: u16) -> Server {
    let child = Command::new(env!("CARGO_BIN_EXE_sidr"))
        .args(["serve", "--port", &port.to_string()])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let server = Server(child);
    let deadline = Instant::now() + Duration::from_secs(30);
    while Instant::now() < deadline {
        if let Ok((200, _)) = http(port, "GET", "/health", "text/plain", b"") {
            return server;
        }
        std::thread::sleep(Duration::from_millis(50));
    }
    panic!("server did not come up on port {port}");
}

#[test]
fn serve_rejects_occupied_port() {
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let out = sidr(&["serve", "--port", &port]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error:"));
}

#[test]
fn served_session_matches_project_command() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), &[]);
    let features = dir.path().join("features.csv");
    let cli_layout = ok(&["project", "--features", features.to_str().unwrap()]).stdout;
    let cli_layout = read_layout(&cli_layout[..]).unwrap();

    let port = free_port();
    let _server = start_server(port);
    let boundary = "cliTestBoundary";
    let mut body = format!(
        "--{boundary}\r\nContent-Disposition: form-data; name=\"features\"; filename=\"features.csv\"\r\n\r\n"
    )
    .into_bytes();
    body.extend_from_slice(&read(&features));
    body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
    let (status, resp) =
        http(port, "POST", "/datasets", &format!("multipart/form-data; boundary={boundary}"), &body).unwrap();
    assert_eq!(status, 201, "{}", String::from_utf8_lossy(&resp));
    let ds: serde_json::Value = serde_json::from_slice(&resp).unwrap();
    let req = serde_json::json!({ "dataset_id": ds["dataset_id"] }).to_string();
    let (status, resp) = http(port, "POST", "/sessions", "application/json", req.as_bytes()).unwrap();
    assert_eq!(status, 201);
    let session: serde_json::Value = serde_json::from_slice(&resp).unwrap();
    let served = session["layout"].as_array().unwrap();
    assert_eq!(served.len(), cli_layout.len());
    for (p, (id, [x, y])) in served.iter().zip(cli_layout.points()) {
        assert_eq!(p["id"].as_str(), Some(id.as_str()));
        assert!((p["x"].as_f64().unwrap() - x).abs() <= 1e-9);
        assert!((p["y"].as_f64().unwrap() - y).abs() <= 1e-9);
    }
}
