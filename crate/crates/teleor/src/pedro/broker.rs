//! The broker: accepts handshakes, keeps the name and subscription
//! tables, acks every data-channel frame and routes notifications.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;

use super::{as_number_i64, broker_route, decode, encode, name_is_valid, Subscription, IO_TIMEOUT};
use crate::term::Term;

struct SessionHandle {
    /// write half of the session's data channel, shared for deliveries
    data: Arc<Mutex<TcpStream>>,
}

#[derive(Default)]
struct State {
    next_client: u64,
    next_sub: u64,
    /// registered name -> owning client
    names: HashMap<String, u64>,
    sessions: HashMap<u64, SessionHandle>,
    /// (owner client, subscription), in creation order
    subs: Vec<(u64, Subscription)>,
}

pub struct Broker {
    listener: TcpListener,
    state: Arc<Mutex<State>>,
}

impl Broker {
    pub fn bind(port: u16) -> std::io::Result<Broker> {
        let listener = TcpListener::bind(("0.0.0.0", port))?;
        Ok(Broker { listener, state: Arc::new(Mutex::new(State::default())) })
    }

    pub fn port(&self) -> u16 {
        self.listener.local_addr().map(|a| a.port()).unwrap_or(0)
    }

    /// Serve forever on the calling thread.
    pub fn run(&self) {
        for conn in self.listener.incoming() {
            match conn {
                Ok(stream) => {
                    let state = Arc::clone(&self.state);
                    thread::spawn(move || {
                        if let Err(e) = handshake(stream, state) {
                            log::warn!("handshake failed: {e}");
                        }
                    });
                }
                Err(e) => log::warn!("accept failed: {e}"),
            }
        }
    }

    /// Serve on a background thread (used by tests and the CLI).
    pub fn spawn(self) -> u16 {
        let port = self.port();
        thread::spawn(move || self.run());
        port
    }
}

fn handshake(mut main: TcpStream, state: Arc<Mutex<State>>) -> std::io::Result<()> {
    // two ephemeral listeners just for this client
    let ack_listener = TcpListener::bind("0.0.0.0:0")?;
    let data_listener = TcpListener::bind("0.0.0.0:0")?;
    let host = main.local_addr()?.ip().to_string();
    main.write_all(
        format!("{host} {} {}\n", ack_listener.local_addr()?.port(), data_listener.local_addr()?.port())
            .as_bytes(),
    )?;
    drop(main); // the client closes too; the side channels take over

    let (mut ack, _) = ack_listener.accept()?;
    ack.set_write_timeout(Some(IO_TIMEOUT))?;
    ack.set_nodelay(true)?;
    let client_id = {
        let mut st = state.lock().unwrap();
        st.next_client += 1;
        st.next_client
    };
    ack.write_all(format!("{client_id}\n").as_bytes())?;

    let (data, _) = data_listener.accept()?;
    data.set_read_timeout(Some(IO_TIMEOUT))?;
    // frames are tiny and latency-sensitive; never batch them
    data.set_nodelay(true)?;
    let mut reader = BufReader::new(data.try_clone()?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.trim() != client_id.to_string() {
        let mut d = data;
        let _ = d.write_all(b"no\n");
        return Ok(());
    }
    let mut data_w = data.try_clone()?;
    data_w.write_all(b"ok\n")?;

    let data_shared = Arc::new(Mutex::new(data_w));
    state
        .lock()
        .unwrap()
        .sessions
        .insert(client_id, SessionHandle { data: Arc::clone(&data_shared) });

    // frames may take arbitrarily long to arrive once established
    reader.get_ref().set_read_timeout(None)?;
    let result = serve_session(client_id, reader, ack, &state);
    cleanup(client_id, &state);
    result
}

fn serve_session(
    client_id: u64,
    reader: BufReader<TcpStream>,
    mut ack: TcpStream,
    state: &Arc<Mutex<State>>,
) -> std::io::Result<()> {
    for line in reader.lines() {
        let line = line?;
        let ok = match decode(&line) {
            Some(term) => handle_frame(client_id, term, state),
            None => false,
        };
        ack.write_all(if ok { b"1\n" } else { b"0\n" })?;
    }
    Ok(())
}

fn handle_frame(client_id: u64, term: Term, state: &Arc<Mutex<State>>) -> bool {
    match &term {
        Term::Compound(f, args) if f == "register" && args.len() == 1 => {
            let Term::Atom(name) = &args[0] else { return false };
            if !name_is_valid(name) {
                return false;
            }
            let mut st = state.lock().unwrap();
            if st.names.contains_key(name) {
                return false;
            }
            st.names.insert(name.clone(), client_id);
            true
        }
        Term::Compound(f, args) if f == "deregister" && args.len() == 1 => {
            let Term::Atom(name) = &args[0] else { return false };
            let mut st = state.lock().unwrap();
            if st.names.get(name) == Some(&client_id) {
                st.names.remove(name);
                true
            } else {
                false
            }
        }
        Term::Compound(f, args) if f == "subscribe" && args.len() == 3 => {
            let head = args[0].clone();
            if !matches!(head, Term::Atom(_) | Term::Compound(..)) {
                return false;
            }
            let Some(rock) = as_number_i64(&args[2]) else { return false };
            let mut st = state.lock().unwrap();
            st.next_sub += 1;
            let sub = Subscription { id: st.next_sub, head, body: args[1].clone(), rock };
            st.subs.push((client_id, sub));
            true
        }
        _ => {
            if !term.is_ground() {
                return false;
            }
            route(&term, state);
            true
        }
    }
}

fn route(notification: &Term, state: &Arc<Mutex<State>>) {
    // snapshot under the lock, write outside it
    let targets: Vec<(Arc<Mutex<TcpStream>>, i64)> = {
        let st = state.lock().unwrap();
        let subs: Vec<Subscription> = st.subs.iter().map(|(_, s)| s.clone()).collect();
        let owners: HashMap<u64, u64> = st.subs.iter().map(|(c, s)| (s.id, *c)).collect();
        broker_route(notification, &subs)
            .into_iter()
            .filter_map(|(sub, _)| {
                let owner = owners.get(&sub.id)?;
                let session = st.sessions.get(owner)?;
                Some((Arc::clone(&session.data), sub.rock))
            })
            .collect()
    };
    for (stream, rock) in targets {
        let frame = format!("{rock} : {}", encode(notification));
        if let Err(e) = stream.lock().unwrap().write_all(frame.as_bytes()) {
            log::warn!("delivery failed: {e}");
        }
    }
}

fn cleanup(client_id: u64, state: &Arc<Mutex<State>>) {
    let mut st = state.lock().unwrap();
    st.sessions.remove(&client_id);
    st.subs.retain(|(c, _)| *c != client_id);
    st.names.retain(|_, c| *c != client_id);
}
