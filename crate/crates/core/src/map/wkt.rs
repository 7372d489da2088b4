//! Minimal WKT reader/writer for `LINESTRING` and `MULTILINESTRING` road layers.

use std::fmt::Write as _;

use super::{MapError, Point};

/// A parsed polyline; always at least two points, in source order.
pub type Polyline = Vec<Point>;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Num(f64),
    Open,
    Close,
    Comma,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.char_indices().peekable(),
            src,
            line: 1,
        }
    }

    fn next_tok(&mut self) -> Result<Option<(Tok, usize)>, MapError> {
        while let Some(&(_, c)) = self.chars.peek() {
            if c == '\n' {
                self.line += 1;
            }
            if c.is_whitespace() {
                self.chars.next();
            } else {
                break;
            }
        }
        let Some((start, c)) = self.chars.next() else {
            return Ok(None);
        };
        let line = self.line;
        let tok = match c {
            '(' => Tok::Open,
            ')' => Tok::Close,
            ',' => Tok::Comma,
            c if c.is_ascii_alphabetic() => {
                let mut end = start + c.len_utf8();
                while let Some(&(i, c)) = self.chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        end = i + c.len_utf8();
                        self.chars.next();
                    } else {
                        break;
                    }
                }
                Tok::Word(self.src[start..end].to_ascii_uppercase())
            }
            c if c.is_ascii_digit() || matches!(c, '-' | '+' | '.') => {
                let mut end = start + 1;
                while let Some(&(i, c)) = self.chars.peek() {
                    if c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '-' | '+') {
                        end = i + 1;
                        self.chars.next();
                    } else {
                        break;
                    }
                }
                let text = &self.src[start..end];
                let v: f64 = text.parse().map_err(|_| MapError::Parse {
                    line,
                    msg: format!("invalid number `{text}`"),
                })?;
                if !v.is_finite() {
                    return Err(MapError::Parse {
                        line,
                        msg: format!("non-finite coordinate `{text}`"),
                    });
                }
                Tok::Num(v)
            }
            other => {
                return Err(MapError::Parse {
                    line,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        };
        Ok(Some((tok, line)))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    peeked: Option<(Tok, usize)>,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<Option<&(Tok, usize)>, MapError> {
        if self.peeked.is_none() {
            self.peeked = self.lex.next_tok()?;
        }
        Ok(self.peeked.as_ref())
    }

    fn next(&mut self) -> Result<Option<(Tok, usize)>, MapError> {
        if let Some(t) = self.peeked.take() {
            return Ok(Some(t));
        }
        self.lex.next_tok()
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<usize, MapError> {
        match self.next()? {
            Some((t, line)) if t == want => Ok(line),
            Some((t, line)) => Err(MapError::Parse {
                line,
                msg: format!("expected {what}, found {t:?}"),
            }),
            None => Err(MapError::Parse {
                line: self.lex.line,
                msg: format!("expected {what}, found end of input"),
            }),
        }
    }

    fn number(&mut self) -> Result<f64, MapError> {
        match self.next()? {
            Some((Tok::Num(v), _)) => Ok(v),
            Some((t, line)) => Err(MapError::Parse {
                line,
                msg: format!("expected coordinate, found {t:?}"),
            }),
            None => Err(MapError::Parse {
                line: self.lex.line,
                msg: "expected coordinate, found end of input".into(),
            }),
        }
    }

    /// `( x y, x y, ... )`
    fn coord_list(&mut self) -> Result<Polyline, MapError> {
        let line = self.expect(Tok::Open, "`(`")?;
        let mut pts = Vec::new();
        loop {
            let x = self.number()?;
            let y = self.number()?;
            pts.push(Point::new(x, y));
            match self.next()? {
                Some((Tok::Comma, _)) => continue,
                Some((Tok::Close, _)) => break,
                Some((t, line)) => {
                    return Err(MapError::Parse {
                        line,
                        msg: format!("expected `,` or `)`, found {t:?}"),
                    })
                }
                None => {
                    return Err(MapError::Parse {
                        line: self.lex.line,
                        msg: "unterminated coordinate list".into(),
                    })
                }
            }
        }
        if pts.len() < 2 {
            return Err(MapError::Parse {
                line,
                msg: format!("polyline has {} point(s); at least 2 required", pts.len()),
            });
        }
        Ok(pts)
    }
}

/// Parses every `LINESTRING` / `MULTILINESTRING` in `text`.
pub fn parse_wkt(text: &str) -> Result<Vec<Polyline>, MapError> {
    let mut p = Parser {
        lex: Lexer::new(text),
        peeked: None,
    };
    let mut out = Vec::new();
    while let Some((tok, line)) = p.next()? {
        match tok {
            Tok::Word(w) if w == "LINESTRING" => out.push(p.coord_list()?),
            Tok::Word(w) if w == "MULTILINESTRING" => {
                p.expect(Tok::Open, "`(`")?;
                loop {
                    out.push(p.coord_list()?);
                    match p.next()? {
                        Some((Tok::Comma, _)) => continue,
                        Some((Tok::Close, _)) => break,
                        Some((t, line)) => {
                            return Err(MapError::Parse {
                                line,
                                msg: format!("expected `,` or `)`, found {t:?}"),
                            })
                        }
                        None => {
                            return Err(MapError::Parse {
                                line: p.lex.line,
                                msg: "unterminated MULTILINESTRING".into(),
                            })
                        }
                    }
                }
            }
            other => {
                return Err(MapError::Parse {
                    line,
                    msg: format!("unsupported geometry token {other:?}"),
                })
            }
        }
        // Tolerate separators some exporters put between geometries.
        while let Some((Tok::Comma, _)) = p.peek()? {
            p.next()?;
        }
    }
    Ok(out)
}

/// Serializes polylines as one `LINESTRING` per line.
pub fn to_wkt(polylines: &[Polyline]) -> String {
    let mut s = String::new();
    for line in polylines {
        s.push_str("LINESTRING (");
        for (i, p) in line.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            // `{}` on f64 is shortest round-trip, so re-parsing is lossless.
            let _ = write!(s, "{} {}", p.x, p.y);
        }
        s.push_str(")\n");
    }
    s
}
