//! Counts heap allocations made by the evaluating thread.

mod common;

use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;

use common::*;
use netdyn::{graphs, network_dynamics, Coupling, EdgeModel, EdgeWindows, NetworkFunction, VertexModel};

struct Counting;

thread_local! {
    static ALLOCS: Cell<usize> = const { Cell::new(0) };
}

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        ALLOCS.with(|c| c.set(c.get() + 1));
        unsafe { System.alloc(layout) }
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) }
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        ALLOCS.with(|c| c.set(c.get() + 1));
        unsafe { System.realloc(ptr, layout, new_size) }
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

fn allocations_during(f: impl FnOnce()) -> usize {
    let before = ALLOCS.with(Cell::get);
    f();
    ALLOCS.with(Cell::get) - before
}

fn assert_allocation_free(nf: &NetworkFunction<f64>, p: &netdyn::ParameterBundle<f64>) {
    let d = nf.dim();
    let u = uniform(d, -2.0, 2.0, 11);
    let hist = uniform(d, -2.0, 2.0, 12);
    let mut du = vec![0.0; d];
    // first call included: the cache is allocated at construction
    let n = allocations_during(|| {
        for k in 0..20 {
            nf.evaluate_rhs(&mut du, &u, p, k as f64);
            nf.evaluate_rhs_delayed(&mut du, &u, &hist, p, k as f64);
        }
    });
    assert_eq!(n, 0);
}

#[test]
fn kuramoto_rhs_allocates_nothing() {
    let g = graphs::watts_strogatz(300, 4, 0.2, 3).unwrap();
    let omega = uniform(300, -1.0, 1.0, 1);
    let p = params(&omega, 5.0);
    for coupling in [Coupling::Fiducial, Coupling::Antisymmetric, Coupling::Symmetric] {
        assert_allocation_free(&kuramoto(&g, coupling), &p);
    }
}

#[test]
fn mixed_components_allocate_nothing() {
    let g = graphs::watts_strogatz(40, 4, 0.3, 8).unwrap();
    let mut vertices = vec![VertexModel::ode(kuramoto_vertex, 1, None).unwrap(); 40];
    vertices[3] = VertexModel::static_vertex(|v: &mut [f64], _e: EdgeWindows<'_>, c: &f64, _t: f64| v[0] = *c, 1, None)
        .unwrap();
    vertices[7] = VertexModel::ode(
        |dv: &mut [f64], v: &[f64], edges: EdgeWindows<'_>, p: &f64, _t: f64| {
            dv[0] = v[1];
            dv[1] = p - v[1];
            for e in edges {
                dv[1] += e[0];
            }
        },
        2,
        None,
    )
    .unwrap();
    let delay = EdgeModel::static_delay_edge(
        |e: &mut [f64], vs: &[f64], _vd: &[f64], _hs: &[f64], hd: &[f64], s: &f64, _t: f64| e[0] = s * (vs[0] - hd[0]).sin(),
        1,
        Coupling::Fiducial,
    )
    .unwrap();
    let omega = uniform(40, -1.0, 1.0, 1);
    let p = params(&omega, 2.0);
    assert_allocation_free(&network_dynamics(vertices.clone(), delay, &g).unwrap(), &p);

    // dynamic edges relaxing toward the phase difference
    let ode_edge = EdgeModel::ode(
        |de: &mut [f64], e: &[f64], vs: &[f64], vd: &[f64], s: &f64, _t: f64| de[0] = s * (vs[0] - vd[0]).sin() - e[0],
        1,
        None,
    )
    .unwrap();
    assert_allocation_free(&network_dynamics(vertices, ode_edge, &g).unwrap(), &p);
}

#[test]
fn counter_sees_allocations() {
    let n = allocations_during(|| {
        let v: Vec<u64> = Vec::with_capacity(16);
        std::hint::black_box(v);
    });
    assert_eq!(n, 1);
}
