//! 8-bit greyscale PGM (P5 binary, P2 ASCII) via the `image` crate's PNM
//! codec.

use std::io::Cursor;

use image::codecs::pnm::{PnmDecoder, PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ColorType, ExtendedColorType, ImageDecoder, ImageEncoder};
use pixie_core::kernels::Image;

use crate::Error;

fn format_error(e: impl std::fmt::Display) -> Error {
    Error::Format(format!("PGM: {e}"))
}

pub fn load_pgm(bytes: &[u8]) -> Result<Image, Error> {
    if !(bytes.starts_with(b"P5") || bytes.starts_with(b"P2")) {
        return Err(Error::Format("PGM: expected a P5 or P2 header".into()));
    }
    let decoder = PnmDecoder::new(Cursor::new(bytes)).map_err(format_error)?;
    if decoder.color_type() != ColorType::L8 {
        return Err(Error::Format("PGM: maxval above 255 is not supported".into()));
    }
    let (width, height) = decoder.dimensions();
    let mut pixels = vec![0u8; decoder.total_bytes() as usize];
    decoder.read_image(&mut pixels).map_err(format_error)?;
    Ok(Image::new(width, height, pixels)?)
}

/// Binary P5 with maxval 255.
pub fn save_pgm(img: &Image) -> Vec<u8> {
    let mut out = Vec::new();
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(img.pixels(), img.width(), img.height(), ExtendedColorType::L8)
        .expect("in-memory PGM encoding cannot fail");
    out
}
