//! Worker pool for per-period subproblem solves.
//!
//! Results always come back in period order, whatever the completion order, so
//! cut insertion and every reported number are independent of the worker count.
use cga_lp::{BackendKind, LpBackend};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub struct Executor {
    backend: BackendKind,
    pool: Option<rayon::ThreadPool>,
    workers: usize,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor")
            .field("backend", &self.backend)
            .field("workers", &self.workers)
            .finish()
    }
}

impl Executor {
    /// `workers == 1` runs everything on the calling thread.
    pub fn new(backend: BackendKind, workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidArgument("worker count must be at least 1".into()));
        }
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .thread_name(|i| format!("cga-worker-{i}"))
                    .build()
                    .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self { backend, pool, workers })
    }

    pub fn sequential(backend: BackendKind) -> Self {
        Self {
            backend,
            pool: None,
            workers: 1,
        }
    }

    pub fn backend_kind(&self) -> BackendKind {
        self.backend
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// A fresh backend handle owned by the caller.
    pub fn handle(&self) -> Box<dyn LpBackend> {
        self.backend.create()
    }

    /// Applies `f` to every item, each worker using its own backend handle.
    pub fn map<T, R, F>(&self, items: &mut [T], f: F) -> Result<Vec<R>>
    where
        T: Send,
        R: Send,
        F: Fn(&mut T, &mut dyn LpBackend) -> Result<R> + Sync,
    {
        match &self.pool {
            None => {
                let mut handle = self.handle();
                items.iter_mut().map(|it| f(it, handle.as_mut())).collect()
            }
            Some(pool) => {
                let kind = self.backend;
                pool.install(|| {
                    items
                        .par_iter_mut()
                        .map_init(|| kind.create(), |h, it| f(it, h.as_mut()))
                        .collect()
                })
            }
        }
    }

    /// Runs independent jobs, concurrently when the pool has more than one worker.
    pub fn run_jobs<T, R, F>(&self, jobs: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        match &self.pool {
            None => jobs.into_iter().map(f).collect(),
            Some(pool) => pool.install(|| jobs.into_par_iter().map(f).collect()),
        }
    }
}
