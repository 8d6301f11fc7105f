use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use edu_bench::bank;
use edu_core::{start_session, QuestionOrder, SessionConfig, Timestamp, WireMessage, WrongPolicy};

fn config(order: QuestionOrder) -> SessionConfig {
    SessionConfig {
        order,
        shuffle_seed: 42,
        wrong_policy: WrongPolicy::Advance,
        feedback_hold_ms: 1000,
        press_debounce_ms: 300,
    }
}

fn press_and_tick(c: &mut Criterion) {
    let bank = bank(40);
    let (presenting, _) =
        start_session(&bank, config(QuestionOrder::Sequential), Timestamp(0)).unwrap();

    c.bench_function("press_accepted", |b| {
        b.iter_batched(
            || presenting.clone(),
            |mut s| black_box(s.handle_press(0, Timestamp(10)).unwrap()),
            BatchSize::SmallInput,
        )
    });

    let mut feedback = presenting.clone();
    feedback.handle_press(0, Timestamp(10)).unwrap();
    c.bench_function("press_ignored_during_feedback", |b| {
        b.iter_batched(
            || feedback.clone(),
            |mut s| black_box(s.handle_press(1, Timestamp(500)).unwrap()),
            BatchSize::SmallInput,
        )
    });
    c.bench_function("tick_advances", |b| {
        b.iter_batched(
            || feedback.clone(),
            |mut s| black_box(s.tick(Timestamp(2000))),
            BatchSize::SmallInput,
        )
    });

    c.bench_function("full_session_40_shuffled", |b| {
        b.iter(|| {
            let (mut s, mut frames) =
                start_session(&bank, config(QuestionOrder::Shuffled), Timestamp(0)).unwrap();
            let mut now = 0;
            for _ in 0..bank.len() {
                now += 400;
                frames.extend(s.handle_press(1, Timestamp(now)).unwrap());
                now += 1000;
                frames.extend(s.tick(Timestamp(now)));
            }
            black_box(
                frames
                    .into_iter()
                    .map(|e| WireMessage::from(e).encode().len())
                    .sum::<usize>(),
            )
        })
    });
}

criterion_group!(benches, press_and_tick);
criterion_main!(benches);
