//! Hub-and-spoke distribution: atomic best-candidate exchange, the
//! deterministic lock-step multi-client simulator, and a line-protocol
//! network transport.
//!
//! The lock-step simulator is the measurement vehicle: every paper-style
//! statistic comes from it. Network mode exercises the distributed-systems
//! surface (join/leave, faults) and is demonstrative.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use crate::ea::{self, EAConfig, RunRecord, CLIENT_STREAM_TAG};
use crate::error::{Error, Result};
use crate::genome::{random_bitstring, BitString};
use crate::rng::{derive_seed, seed_rng};

/// Best-candidate store. Fitness is non-decreasing over its lifetime;
/// `version` increments exactly when the stored candidate changes.
#[derive(Clone, Debug, Default)]
pub struct HubState {
    best: Option<(BitString, u32)>,
    version: u64,
}

impl HubState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn best(&self) -> Option<(BitString, u32)> {
        self.best
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Atomic compare-and-exchange: the hub adopts the candidate when its
    /// fitness is at least the hub's (ties overwrite), and the resulting
    /// hub best is returned. Callers adopt the result only when strictly
    /// fitter than their own candidate.
    pub fn sync(&mut self, candidate: BitString, fitness: u32) -> Result<(BitString, u32)> {
        if let Some((stored, _)) = self.best {
            if stored.len() != candidate.len() {
                return Err(Error::Protocol(format!(
                    "candidate length {} does not match hub length {}",
                    candidate.len(),
                    stored.len()
                )));
            }
        }
        match self.best {
            Some((stored, f)) if fitness < f => Ok((stored, f)),
            _ => {
                if self.best != Some((candidate, fitness)) {
                    self.version += 1;
                }
                self.best = Some((candidate, fitness));
                Ok((candidate, fitness))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistMode {
    LockStep,
    Network,
}

#[derive(Clone, Debug)]
pub struct DistConfig {
    pub ea: EAConfig,
    pub clients: u32,
    pub mode: DistMode,
}

impl DistConfig {
    pub fn lockstep(ea: EAConfig, clients: u32) -> Self {
        Self {
            ea,
            clients,
            mode: DistMode::LockStep,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ea.validate()?;
        if self.clients < 1 {
            return Err(Error::Config("need at least one client".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistRunRecord {
    pub rounds: u64,
    /// Evaluations summed over all clients, initial ones included.
    pub total_evaluations: u64,
    pub converged: bool,
}

/// Deterministic lock-step run: each round every client syncs with the hub
/// (in fixed index order, then adopts the round's final hub best), then
/// takes one EA step. Convergence is declared at the end of the round in
/// which any client or the hub holds an optimum.
pub fn run_lockstep(config: &DistConfig) -> Result<DistRunRecord> {
    run_lockstep_traced(config, |_, _, _| {})
}

/// Lock-step run with a per-round observer called after the sync phase
/// with (round, client fitness values, hub fitness).
pub fn run_lockstep_traced(
    config: &DistConfig,
    mut after_sync: impl FnMut(u64, &[u32], u32),
) -> Result<DistRunRecord> {
    config.validate()?;
    let c = config.clients as usize;
    let problem = config.ea.problem;
    let mut rngs: Vec<_> = (0..c)
        .map(|i| seed_rng(derive_seed(config.ea.seed, &[CLIENT_STREAM_TAG, i as u64])))
        .collect();
    let mut candidates = Vec::with_capacity(c);
    for rng in rngs.iter_mut() {
        let x = random_bitstring(config.ea.n, rng)?;
        candidates.push((x, problem.evaluate(x)));
    }
    let mut hub = HubState::new();
    let done = |cands: &[(BitString, u32)], hub: &HubState| {
        cands.iter().any(|&(x, _)| problem.is_optimal(x))
            || hub.best().is_some_and(|(z, _)| problem.is_optimal(z))
    };
    let mut rounds = 0u64;
    let mut converged = done(&candidates, &hub);
    while !converged {
        if rounds >= config.ea.max_iterations {
            break;
        }
        // sync phase: put/get in index order, then adopt the final best
        for &(x, f) in candidates.iter() {
            hub.sync(x, f)?;
        }
        let (best, best_f) = hub.best().expect("hub nonempty after sync pass");
        for (x, f) in candidates.iter_mut() {
            if best_f > *f {
                *x = best;
                *f = best_f;
            }
        }
        let fits: Vec<u32> = candidates.iter().map(|&(_, f)| f).collect();
        after_sync(rounds, &fits, best_f);
        // step phase
        for (i, (x, f)) in candidates.iter_mut().enumerate() {
            *x = ea::step(*x, &config.ea, &mut rngs[i]);
            *f = problem.evaluate(*x);
        }
        rounds += 1;
        converged = done(&candidates, &hub);
    }
    Ok(DistRunRecord {
        rounds,
        total_evaluations: c as u64 * rounds + c as u64,
        converged,
    })
}

// ---------------------------------------------------------------------------
// network transport
// ---------------------------------------------------------------------------

pub type SharedHub = Arc<Mutex<HubState>>;

/// Running hub server; dropping does not stop it, call `shutdown`.
pub struct HubServer {
    addr: SocketAddr,
    hub: SharedHub,
    stop: Arc<AtomicBool>,
    handle: Option<thread::JoinHandle<()>>,
}

impl HubServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn hub(&self) -> SharedHub {
        Arc::clone(&self.hub)
    }

    pub fn best(&self) -> Option<(BitString, u32)> {
        self.hub.lock().unwrap().best()
    }

    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // poke the accept loop
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

/// Serve the hub protocol until shutdown. Clients may join and leave at
/// any time; every SYNC is processed atomically.
///
/// Protocol, one request per line:
///   `SYNC <fitness> <n> <hex-bits>` -> `BEST <fitness> <n> <hex-bits>` | `ERR <reason>`
///   `PING` -> `PONG`
///   `QUIT` closes the connection.
/// Fitness `-1` with an all-zero candidate is the read-only sentinel.
pub fn serve_hub(bind_address: &str, expected_n: usize) -> Result<HubServer> {
    let listener = TcpListener::bind(bind_address)?;
    let addr = listener.local_addr()?;
    let hub: SharedHub = Arc::new(Mutex::new(HubState::new()));
    let stop = Arc::new(AtomicBool::new(false));
    let accept_hub = Arc::clone(&hub);
    let accept_stop = Arc::clone(&stop);
    let handle = thread::spawn(move || {
        for stream in listener.incoming() {
            if accept_stop.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = stream else { continue };
            let hub = Arc::clone(&accept_hub);
            thread::spawn(move || {
                let _ = serve_connection(stream, hub, expected_n);
            });
        }
    });
    Ok(HubServer {
        addr,
        hub,
        stop,
        handle: Some(handle),
    })
}

fn serve_connection(stream: TcpStream, hub: SharedHub, expected_n: usize) -> std::io::Result<()> {
    let mut writer = stream.try_clone()?;
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        let line = line?;
        let reply = match handle_request(line.trim(), &hub, expected_n) {
            Request::Reply(s) => s,
            Request::Quit => break,
        };
        writer.write_all(reply.as_bytes())?;
        writer.write_all(b"\n")?;
        writer.flush()?;
    }
    Ok(())
}

enum Request {
    Reply(String),
    Quit,
}

fn handle_request(line: &str, hub: &SharedHub, expected_n: usize) -> Request {
    let mut parts = line.split_whitespace();
    match parts.next() {
        Some("PING") => Request::Reply("PONG".into()),
        Some("QUIT") => Request::Quit,
        Some("SYNC") => {
            let reply = sync_request(parts, hub, expected_n)
                .unwrap_or_else(|e| format!("ERR {}", err_token(&e)));
            Request::Reply(reply)
        }
        _ => Request::Reply("ERR malformed".into()),
    }
}

fn err_token(e: &Error) -> String {
    match e {
        Error::Protocol(msg) if msg.contains("length") => "length".into(),
        _ => "malformed".into(),
    }
}

fn sync_request<'a>(
    mut parts: impl Iterator<Item = &'a str>,
    hub: &SharedHub,
    expected_n: usize,
) -> Result<String> {
    let fitness: i64 = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Protocol("missing fitness".into()))?;
    let n: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Protocol("missing length".into()))?;
    let hex = parts
        .next()
        .ok_or_else(|| Error::Protocol("missing candidate".into()))?;
    if parts.next().is_some() {
        return Err(Error::Protocol("trailing tokens".into()));
    }
    if n != expected_n {
        return Err(Error::Protocol(format!(
            "length {n} does not match hub length {expected_n}"
        )));
    }
    let candidate = BitString::from_hex(hex, n)?;
    let best = if fitness < 0 {
        hub.lock().unwrap().best()
    } else {
        Some(hub.lock().unwrap().sync(candidate, fitness as u32)?)
    };
    Ok(match best {
        Some((x, f)) => format!("BEST {f} {n} {}", x.to_hex()),
        None => format!("BEST -1 {n} {}", BitString::zeros(n).to_hex()),
    })
}

/// Client-side connection with line-oriented request/reply.
struct HubConn {
    writer: TcpStream,
    reader: BufReader<TcpStream>,
}

impl HubConn {
    fn connect(addr: &str) -> Result<Self> {
        let sock_addr = addr
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| Error::Config(format!("cannot resolve '{addr}'")))?;
        let stream = TcpStream::connect_timeout(&sock_addr, Duration::from_secs(2))?;
        stream.set_read_timeout(Some(Duration::from_secs(5)))?;
        let writer = stream.try_clone()?;
        Ok(Self {
            writer,
            reader: BufReader::new(stream),
        })
    }

    fn request(&mut self, line: &str) -> Result<String> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        let mut reply = String::new();
        if self.reader.read_line(&mut reply)? == 0 {
            return Err(Error::Protocol("hub closed the connection".into()));
        }
        Ok(reply.trim().to_string())
    }

    fn sync(&mut self, x: BitString, fitness: u32) -> Result<Option<(BitString, u32)>> {
        let reply = self.request(&format!("SYNC {fitness} {} {}", x.len(), x.to_hex()))?;
        parse_best(&reply, x.len())
    }
}

fn parse_best(reply: &str, n: usize) -> Result<Option<(BitString, u32)>> {
    let mut parts = reply.split_whitespace();
    match parts.next() {
        Some("BEST") => {
            let fitness: i64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Protocol(format!("bad reply '{reply}'")))?;
            let rn: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Protocol(format!("bad reply '{reply}'")))?;
            let hex = parts
                .next()
                .ok_or_else(|| Error::Protocol(format!("bad reply '{reply}'")))?;
            if fitness < 0 {
                return Ok(None);
            }
            if rn != n {
                return Err(Error::Protocol(format!(
                    "hub length {rn} does not match client length {n}"
                )));
            }
            Ok(Some((BitString::from_hex(hex, n)?, fitness as u32)))
        }
        Some("ERR") => Err(Error::Protocol(format!("hub rejected request: {reply}"))),
        _ => Err(Error::Protocol(format!("bad reply '{reply}'"))),
    }
}

const CONNECT_ATTEMPTS: u32 = 5;

fn connect_with_backoff(addr: &str) -> Result<HubConn> {
    let mut last = None;
    for attempt in 0..CONNECT_ATTEMPTS {
        match HubConn::connect(addr) {
            Ok(conn) => return Ok(conn),
            Err(e) => {
                last = Some(e);
                thread::sleep(Duration::from_millis(50 << attempt));
            }
        }
    }
    Err(last.unwrap())
}

/// Full network client: identical EA semantics to a lock-step client, with
/// a hub sync every iteration. On a mid-run disconnect the EA continues
/// and syncing resumes once the hub is reachable again.
pub fn run_network_client(hub_address: &str, config: &EAConfig) -> Result<RunRecord> {
    config.validate()?;
    let mut conn = Some(connect_with_backoff(hub_address)?);
    let problem = config.problem;
    let mut rng = seed_rng(derive_seed(config.seed, &[CLIENT_STREAM_TAG, 0]));
    let mut x = random_bitstring(config.n, &mut rng)?;
    let mut fitness = problem.evaluate(x);
    let mut generations = 0u64;
    loop {
        // hub interaction; a failed sync downgrades to local search
        match conn.as_mut().map(|c| c.sync(x, fitness)) {
            Some(Ok(Some((z, fz)))) if fz > fitness => {
                x = z;
                fitness = fz;
            }
            Some(Ok(_)) => {}
            Some(Err(Error::Protocol(msg))) if msg.contains("rejected") => {
                return Err(Error::Protocol(msg));
            }
            Some(Err(_)) => {
                conn = HubConn::connect(hub_address).ok();
            }
            None => {
                conn = HubConn::connect(hub_address).ok();
            }
        }
        if problem.is_optimal(x) {
            return Ok(RunRecord {
                generations,
                evaluations: generations + 1,
                converged: true,
                final_fitness: fitness,
            });
        }
        if generations >= config.max_iterations {
            return Ok(RunRecord {
                generations,
                evaluations: generations + 1,
                converged: false,
                final_fitness: fitness,
            });
        }
        x = ea::step(x, config, &mut rng);
        fitness = problem.evaluate(x);
        generations += 1;
    }
}
