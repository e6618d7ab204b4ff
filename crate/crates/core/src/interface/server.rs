//! Session host over TCP (one thread and one session per connection) or
//! over stdin/stdout.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::Duration;

use super::protocol::{Body, Conversation, HostConfig};

pub const HEARTBEAT: Duration = Duration::from_secs(5);

struct Shared<W> {
    conv: Conversation,
    out: W,
}

fn write_all<W: Write>(s: &mut Shared<W>, msgs: Vec<super::Message>) -> io::Result<()> {
    for m in msgs {
        writeln!(s.out, "{}", m.to_line())?;
    }
    s.out.flush()
}

/// Serve one conversation until the reader closes or the peer's protocol
/// version is refused. Replies and heartbeats share one lock, so writes never
/// interleave and sequence numbers stay ordered.
pub fn serve_stream<R: BufRead, W: Write + Send + 'static>(
    reader: R,
    writer: W,
    conv: Conversation,
    heartbeat: Duration,
) -> io::Result<()> {
    let shared = Arc::new(Mutex::new(Shared { conv, out: writer }));
    let stop = Arc::new((Mutex::new(false), Condvar::new()));
    let beat = {
        let shared = Arc::clone(&shared);
        let stop = Arc::clone(&stop);
        thread::spawn(move || loop {
            let (lock, cv) = &*stop;
            let done = cv.wait_timeout_while(lock.lock().unwrap(), heartbeat, |d| !*d).unwrap().0;
            if *done {
                return;
            }
            drop(done);
            let mut s = shared.lock().unwrap();
            let m = s.conv.stamp(Body::Heartbeat);
            if write_all(&mut s, vec![m]).is_err() {
                return;
            }
        })
    };
    let result = (|| {
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut s = shared.lock().unwrap();
            let replies = s.conv.handle_line(&line);
            write_all(&mut s, replies)?;
            if s.conv.is_closed() {
                break;
            }
        }
        Ok(())
    })();
    let (lock, cv) = &*stop;
    *lock.lock().unwrap() = true;
    cv.notify_all();
    let _ = beat.join();
    result
}

pub fn serve_stdio(host: HostConfig) -> io::Result<()> {
    let stdin = io::stdin();
    serve_stream(stdin.lock(), io::stdout(), Conversation::new("stdio", host), HEARTBEAT)
}

pub struct Server {
    listener: TcpListener,
    host: HostConfig,
    heartbeat: Duration,
    shutdown: Arc<AtomicBool>,
}

impl Server {
    pub fn bind(addr: &str, host: HostConfig) -> io::Result<Self> {
        Ok(Server {
            listener: TcpListener::bind(addr)?,
            host,
            heartbeat: HEARTBEAT,
            shutdown: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn with_heartbeat(mut self, every: Duration) -> Self {
        self.heartbeat = every;
        self
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Flag that stops the accept loop after the next connection attempt.
    pub fn shutdown_flag(&self) -> Arc<AtomicBool> {
        Arc::clone(&self.shutdown)
    }

    pub fn run(self) -> io::Result<()> {
        let ids = AtomicU64::new(0);
        for stream in self.listener.incoming() {
            if self.shutdown.load(Ordering::SeqCst) {
                break;
            }
            let stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("accept failed: {e}");
                    continue;
                }
            };
            let id = format!("s{}", ids.fetch_add(1, Ordering::SeqCst) + 1);
            let host = self.host.clone();
            let every = self.heartbeat;
            thread::spawn(move || {
                if let Err(e) = handle_connection(stream, id.clone(), host, every) {
                    eprintln!("session {id}: {e}");
                }
            });
        }
        Ok(())
    }

    /// Run the accept loop on a background thread.
    pub fn spawn(self) -> io::Result<(SocketAddr, Arc<AtomicBool>)> {
        let addr = self.local_addr()?;
        let flag = self.shutdown_flag();
        thread::spawn(move || self.run());
        Ok((addr, flag))
    }
}

fn handle_connection(stream: TcpStream, id: String, host: HostConfig, every: Duration) -> io::Result<()> {
    let reader = BufReader::new(stream.try_clone()?);
    let writer = stream.try_clone()?;
    let r = serve_stream(reader, writer, Conversation::new(id, host), every);
    let _ = stream.shutdown(Shutdown::Both);
    r
}
