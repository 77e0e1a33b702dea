//! Client side of the protocol: the handshake state machine, blocking
//! notify-with-ack, and an inbound delivery queue fed by a reader thread.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::{decode, encode, PedroError, IO_TIMEOUT};
use crate::term::Term;

pub struct Client {
    data: TcpStream,
    ack: BufReader<TcpStream>,
    deliveries: Receiver<(i64, Term)>,
    pub client_id: u64,
}

impl Client {
    /// The handshake: dial the main port, learn the two side-channel
    /// ports, establish the ack channel (receiving our client id), then
    /// the data channel (sending the id back), and confirm `ok`.
    pub fn connect(host: &str, port: u16) -> Result<Client, PedroError> {
        let main = TcpStream::connect((host, port))?;
        main.set_read_timeout(Some(IO_TIMEOUT))?;
        let mut greeting = String::new();
        BufReader::new(&main).read_line(&mut greeting)?;
        drop(main);

        let mut parts = greeting.split_whitespace();
        let (_bhost, ack_port, data_port) = match (parts.next(), parts.next(), parts.next()) {
            (Some(h), Some(a), Some(d)) => (
                h,
                a.parse::<u16>().map_err(|_| bad_greeting(&greeting))?,
                d.parse::<u16>().map_err(|_| bad_greeting(&greeting))?,
            ),
            _ => return Err(bad_greeting(&greeting)),
        };

        let ack_stream = TcpStream::connect((host, ack_port))?;
        ack_stream.set_read_timeout(Some(IO_TIMEOUT))?;
        ack_stream.set_nodelay(true)?;
        let mut ack = BufReader::new(ack_stream);
        let mut id_line = String::new();
        ack.read_line(&mut id_line)?;
        let client_id: u64 = id_line
            .trim()
            .parse()
            .map_err(|_| PedroError::Handshake(format!("bad client id line {id_line:?}")))?;

        let mut data = TcpStream::connect((host, data_port))?;
        data.set_read_timeout(Some(IO_TIMEOUT))?;
        // frames are tiny and latency-sensitive; never batch them
        data.set_nodelay(true)?;
        data.write_all(format!("{client_id}\n").as_bytes())?;
        let mut data_reader = BufReader::new(data.try_clone()?);
        let mut status = String::new();
        data_reader.read_line(&mut status)?;
        if status != "ok\n" {
            return Err(PedroError::Handshake(format!("status was {status:?}, not \"ok\\n\"")));
        }

        // deliveries can arrive at any time from here on
        data_reader.get_ref().set_read_timeout(None)?;
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in data_reader.lines() {
                let Ok(line) = line else { break };
                if let Some(parsed) = parse_delivery(&line) {
                    if tx.send(parsed).is_err() {
                        break;
                    }
                } else {
                    log::warn!("unparseable delivery frame {line:?}");
                }
            }
        });

        Ok(Client { data, ack, deliveries: rx, client_id })
    }

    /// Write one frame on the data channel without waiting for the ack.
    pub fn send_line(&mut self, line: &str) -> Result<(), PedroError> {
        debug_assert!(line.ends_with('\n'));
        self.data.write_all(line.as_bytes())?;
        Ok(())
    }

    /// Read the next acknowledgement digit.
    pub fn read_ack(&mut self) -> Result<bool, PedroError> {
        let mut line = String::new();
        self.ack.read_line(&mut line)?;
        match line.trim() {
            "1" => Ok(true),
            "0" => Ok(false),
            other => Err(PedroError::Handshake(format!("bad ack {other:?}"))),
        }
    }

    /// Publish a term and wait for its acknowledgement.
    pub fn notify(&mut self, payload: &Term) -> Result<bool, PedroError> {
        self.send_line(&encode(payload))?;
        self.read_ack()
    }

    /// Raw bytes escape hatch (used to exercise malformed frames).
    pub fn notify_raw(&mut self, raw: &str) -> Result<bool, PedroError> {
        let mut line = raw.to_string();
        if !line.ends_with('\n') {
            line.push('\n');
        }
        self.send_line(&line)?;
        self.read_ack()
    }

    pub fn register(&mut self, name: &str) -> Result<bool, PedroError> {
        self.notify(&Term::compound("register", vec![Term::atom(name)]))
    }

    pub fn deregister(&mut self, name: &str) -> Result<bool, PedroError> {
        self.notify(&Term::compound("deregister", vec![Term::atom(name)]))
    }

    pub fn subscribe(&mut self, head: Term, body: Term, rock: i64) -> Result<bool, PedroError> {
        self.notify(&Term::compound("subscribe", vec![head, body, Term::int(rock)]))
    }

    /// Next inbound delivery as (rock, payload), if one arrives in time.
    pub fn recv_delivery(&self, timeout: Duration) -> Option<(i64, Term)> {
        match self.deliveries.recv_timeout(timeout) {
            Ok(d) => Some(d),
            Err(RecvTimeoutError::Timeout | RecvTimeoutError::Disconnected) => None,
        }
    }

    /// Like `recv_delivery`, but distinguishes a quiet feed from a dead one.
    pub fn recv_delivery_checked(
        &self,
        timeout: Duration,
    ) -> Result<(i64, Term), RecvTimeoutError> {
        self.deliveries.recv_timeout(timeout)
    }

    /// Drain anything already queued, returning the deliveries in order.
    pub fn drain_deliveries(&self) -> Vec<(i64, Term)> {
        let mut out = Vec::new();
        while let Ok(d) = self.deliveries.try_recv() {
            out.push(d);
        }
        out
    }
}

fn bad_greeting(line: &str) -> PedroError {
    PedroError::Handshake(format!("bad greeting line {line:?}"))
}

/// Delivery frames look like `rock : payload`.
fn parse_delivery(line: &str) -> Option<(i64, Term)> {
    let (rock_text, payload_text) = line.split_once(" : ")?;
    let rock = rock_text.trim().parse().ok()?;
    let payload = decode(payload_text)?;
    Some((rock, payload))
}
