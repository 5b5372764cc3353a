//! Read-only inspection endpoint: answers every HTTP request with the data
//! pool dump.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};

fn respond(stream: TcpStream, body: &str) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut line = String::new();
    while reader.read_line(&mut line)? > 2 {
        line.clear();
    }
    let (status, body) = if request_line.starts_with("GET ") {
        ("200 OK", body)
    } else {
        ("405 Method Not Allowed", "")
    };
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: application/x-ndjson\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    stream.flush()
}

/// Serves `body` to `max_requests` clients (forever when `None`).
pub fn serve_dump(listener: TcpListener, body: &str, max_requests: Option<u64>) -> io::Result<()> {
    for (served, stream) in (1..).zip(listener.incoming()) {
        respond(stream?, body)?;
        if max_requests.is_some_and(|m| served >= m) {
            break;
        }
    }
    Ok(())
}
