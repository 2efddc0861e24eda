use crate::err::{Error, Result};
use crate::raster::{Gray, Mask, Raster};
use crate::Seg2;

pub const MAGIC: &[u8; 4] = b"PTXI";
/// Noise values are shipped as 16-bit grayscale; the affine map below
/// covers the spread a Gaussian with sigma up to 50 realistically produces.
pub const NOISE_OFFSET: f64 = 512.0;
pub const NOISE_SCALE: f64 = 64.0;

/// One self-contained job for an inpainting service: the working-size
/// texture, which pixels to synthesize, a structure-aware noise
/// initialization, the guiding lines, and the seed that produced the noise.
#[derive(Clone, Debug)]
pub struct InpaintRequest {
    pub image: Raster,
    pub mask: Mask,
    pub noise: Gray,
    pub lines: Vec<Seg2>,
    pub seed: u64,
}

impl InpaintRequest {
    pub fn validate(&self) -> Result<()> {
        if self.mask.w != self.image.w
            || self.mask.h != self.image.h
            || self.noise.w != self.image.w
            || self.noise.h != self.image.h
        {
            return Err(Error::Config(format!(
                "inpaint request planes disagree: image {}x{}, mask {}x{}, noise {}x{}",
                self.image.w, self.image.h, self.mask.w, self.mask.h, self.noise.w, self.noise.h
            )));
        }
        Ok(())
    }
}

fn encode_png(
    w: usize,
    h: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    data: &[u8],
) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, w as u32, h as u32);
    enc.set_color(color);
    enc.set_depth(depth);
    let mut writer = enc
        .write_header()
        .map_err(|e| Error::Image(format!("png header: {e}")))?;
    writer
        .write_image_data(data)
        .map_err(|e| Error::Image(format!("png data: {e}")))?;
    writer
        .finish()
        .map_err(|e| Error::Image(format!("png finish: {e}")))?;
    Ok(out)
}

struct DecodedPng {
    w: usize,
    h: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    data: Vec<u8>,
}

fn decode_png(bytes: &[u8]) -> Result<DecodedPng> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    // Identity keeps packed 1-bit and 16-bit payloads byte-exact.
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Image(format!("png read: {e}")))?;
    let mut data = vec![
        0u8;
        reader
            .output_buffer_size()
            .ok_or_else(|| Error::Image("png output size overflow".into()))?
    ];
    let info = reader
        .next_frame(&mut data)
        .map_err(|e| Error::Image(format!("png frame: {e}")))?;
    data.truncate(info.buffer_size());
    Ok(DecodedPng {
        w: info.width as usize,
        h: info.height as usize,
        color: info.color_type,
        depth: info.bit_depth,
        data,
    })
}

fn quant8(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn encode_image_png(image: &Raster) -> Result<Vec<u8>> {
    let mut data = Vec::with_capacity(image.w * image.h * 3);
    for p in image.pixels() {
        data.extend_from_slice(&[quant8(p[0]), quant8(p[1]), quant8(p[2])]);
    }
    encode_png(
        image.w,
        image.h,
        png::ColorType::Rgb,
        png::BitDepth::Eight,
        &data,
    )
}

pub fn decode_image_png(bytes: &[u8]) -> Result<Raster> {
    let png = decode_png(bytes)?;
    if png.color != png::ColorType::Rgb || png.depth != png::BitDepth::Eight {
        return Err(Error::Image(format!(
            "expected 8-bit RGB image, got {:?}/{:?}",
            png.color, png.depth
        )));
    }
    let mut raster = Raster::new(png.w, png.h);
    for y in 0..png.h {
        for x in 0..png.w {
            let at = (y * png.w + x) * 3;
            raster.set(
                x,
                y,
                [
                    png.data[at] as f64 / 255.0,
                    png.data[at + 1] as f64 / 255.0,
                    png.data[at + 2] as f64 / 255.0,
                ],
            );
        }
    }
    Ok(raster)
}

pub fn encode_mask_png(mask: &Mask) -> Result<Vec<u8>> {
    let stride = mask.w.div_ceil(8);
    let mut data = vec![0u8; stride * mask.h];
    for y in 0..mask.h {
        for x in 0..mask.w {
            if mask.get(x, y) {
                data[y * stride + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    encode_png(
        mask.w,
        mask.h,
        png::ColorType::Grayscale,
        png::BitDepth::One,
        &data,
    )
}

pub fn decode_mask_png(bytes: &[u8]) -> Result<Mask> {
    let png = decode_png(bytes)?;
    if png.color != png::ColorType::Grayscale || png.depth != png::BitDepth::One {
        return Err(Error::Image(format!(
            "expected 1-bit grayscale mask, got {:?}/{:?}",
            png.color, png.depth
        )));
    }
    let stride = png.w.div_ceil(8);
    Ok(Mask::from_fn(png.w, png.h, |x, y| {
        png.data[y * stride + x / 8] & (0x80 >> (x % 8)) != 0
    }))
}

fn noise_to_u16(v: f64) -> u16 {
    ((v + NOISE_OFFSET) * NOISE_SCALE).round().clamp(0.0, 65535.0) as u16
}

pub fn encode_noise_png(noise: &Gray) -> Result<Vec<u8>> {
    let mut data = Vec::with_capacity(noise.w * noise.h * 2);
    for &v in noise.values() {
        data.extend_from_slice(&noise_to_u16(v).to_be_bytes());
    }
    encode_png(
        noise.w,
        noise.h,
        png::ColorType::Grayscale,
        png::BitDepth::Sixteen,
        &data,
    )
}

pub fn decode_noise_png(bytes: &[u8]) -> Result<Gray> {
    let png = decode_png(bytes)?;
    if png.color != png::ColorType::Grayscale || png.depth != png::BitDepth::Sixteen {
        return Err(Error::Image(format!(
            "expected 16-bit grayscale noise, got {:?}/{:?}",
            png.color, png.depth
        )));
    }
    Ok(Gray::from_fn(png.w, png.h, |x, y| {
        let at = (y * png.w + x) * 2;
        let raw = u16::from_be_bytes([png.data[at], png.data[at + 1]]);
        raw as f64 / NOISE_SCALE - NOISE_OFFSET
    }))
}

fn push_block(out: &mut Vec<u8>, block: &[u8]) {
    out.extend_from_slice(&(block.len() as u32).to_le_bytes());
    out.extend_from_slice(block);
}

fn take_block<'a>(bytes: &'a [u8], at: &mut usize) -> Result<&'a [u8]> {
    let malformed = || Error::Backend("malformed inpaint payload: truncated block".into());
    let len_end = at.checked_add(4).ok_or_else(malformed)?;
    if len_end > bytes.len() {
        return Err(malformed());
    }
    let len = u32::from_le_bytes(bytes[*at..len_end].try_into().unwrap()) as usize;
    let end = len_end.checked_add(len).ok_or_else(malformed)?;
    if end > bytes.len() {
        return Err(malformed());
    }
    *at = end;
    Ok(&bytes[len_end..end])
}

/// Container layout: magic, then length-prefixed image, mask, noise, and
/// line-list blocks, then the raw seed.
pub fn encode_request(req: &InpaintRequest) -> Result<Vec<u8>> {
    req.validate()?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    push_block(&mut out, &encode_image_png(&req.image)?);
    push_block(&mut out, &encode_mask_png(&req.mask)?);
    push_block(&mut out, &encode_noise_png(&req.noise)?);
    let lines: Vec<[f64; 4]> = req
        .lines
        .iter()
        .map(|s| [s.p1.x, s.p1.y, s.p2.x, s.p2.y])
        .collect();
    let json = serde_json::to_vec(&lines)
        .map_err(|e| Error::Backend(format!("encoding inpaint lines: {e}")))?;
    push_block(&mut out, &json);
    out.extend_from_slice(&req.seed.to_le_bytes());
    Ok(out)
}

pub fn decode_request(bytes: &[u8]) -> Result<InpaintRequest> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::Backend(
            "malformed inpaint payload: bad magic".into(),
        ));
    }
    let mut at = 4;
    let image = decode_image_png(take_block(bytes, &mut at)?)?;
    let mask = decode_mask_png(take_block(bytes, &mut at)?)?;
    let noise = decode_noise_png(take_block(bytes, &mut at)?)?;
    let json = take_block(bytes, &mut at)?;
    let lines: Vec<[f64; 4]> = serde_json::from_slice(json)
        .map_err(|e| Error::Backend(format!("malformed inpaint payload: lines: {e}")))?;
    if at + 8 > bytes.len() {
        return Err(Error::Backend(
            "malformed inpaint payload: missing seed".into(),
        ));
    }
    let seed = u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    let req = InpaintRequest {
        image,
        mask,
        noise,
        lines: lines
            .iter()
            .map(|l| Seg2 {
                p1: crate::P2::new(l[0], l[1]),
                p2: crate::P2::new(l[2], l[3]),
            })
            .collect(),
        seed,
    };
    req.validate()?;
    Ok(req)
}
