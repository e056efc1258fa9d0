use std::io::{self, BufRead, Write};

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0)
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Option<Self> {
        (pixels.len() == width * height && width > 0 && height > 0).then_some(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Copies `tile` with its top-left corner at (x0, y0).
    pub fn blit(&mut self, tile: &Image, x0: usize, y0: usize) {
        for y in 0..tile.height {
            let src = &tile.pixels[y * tile.width..(y + 1) * tile.width];
            let start = (y0 + y) * self.width + x0;
            self.pixels[start..start + tile.width].copy_from_slice(src);
        }
    }

    /// 64-bit FNV-1a over width, height (little-endian u32) and pixels.
    pub fn content_hash(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let header = [
            (self.width as u32).to_le_bytes(),
            (self.height as u32).to_le_bytes(),
        ];
        header
            .iter()
            .flatten()
            .chain(self.pixels.iter())
            .fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
    }

    /// Binary PGM (P5, maxval 255).
    pub fn write_pgm<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.pixels)
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len() + 20);
        self.write_pgm(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_pgm<R: BufRead>(mut r: R) -> io::Result<Self> {
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        let mut header = Vec::new();
        // magic, width, height, maxval; '#' comments skipped
        while header.len() < 4 {
            let mut line = String::new();
            if r.read_line(&mut line)? == 0 {
                return Err(bad("truncated PGM header"));
            }
            let line = line.split('#').next().unwrap_or("");
            header.extend(line.split_whitespace().map(str::to_owned));
        }
        if header[0] != "P5" || header.len() != 4 {
            return Err(bad("not a binary PGM"));
        }
        let dim = |s: &str| s.parse::<usize>().map_err(|_| bad("bad PGM dimension"));
        let (width, height) = (dim(&header[1])?, dim(&header[2])?);
        if header[3] != "255" {
            return Err(bad("only maxval 255 is supported"));
        }
        let mut pixels = vec![0; width * height];
        r.read_exact(&mut pixels)?;
        Self::from_pixels(width, height, pixels).ok_or_else(|| bad("empty PGM"))
    }
}
