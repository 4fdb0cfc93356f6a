//! Row-parallel helpers. Every closure writes one row from read-only inputs,
//! so parallel and sequential evaluation are bit-identical.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) fn for_each_row<F>(out: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    out.par_chunks_mut(width)
        .enumerate()
        .for_each(|(y, row)| f(y, row));
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(width)
        .enumerate()
        .for_each(|(y, row)| f(y, row));
}

pub(crate) fn for_each_row_pair<F>(a: &mut [f64], b: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64], &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    a.par_chunks_mut(width)
        .zip(b.par_chunks_mut(width))
        .enumerate()
        .for_each(|(y, (ra, rb))| f(y, ra, rb));
    #[cfg(not(feature = "parallel"))]
    a.chunks_mut(width)
        .zip(b.chunks_mut(width))
        .enumerate()
        .for_each(|(y, (ra, rb))| f(y, ra, rb));
}
