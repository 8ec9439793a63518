//! Drives the weighted virtual clock by hand: two jobs of equal estimated
//! work, one with twice the weight, share a simulated machine.

use fairsched::prelude::*;

fn main() {
    let mut clock = VirtualClock::new();
    let heavy = clock.on_arrival(0.0, 1, 2.0, 2.0).unwrap();
    let light = clock.on_arrival(0.0, 2, 2.0, 1.0).unwrap();
    println!("finish tags: heavy {heavy}, light {light}");
    println!("first to finish: {:?}", clock.next_virtual_completion());

    for t in [1.0, 3.0, 3.5, 4.0] {
        let done = clock.advance_to(t).unwrap();
        println!(
            "t={t}: v={:.3}, active weight {}, completed {:?}",
            clock.v_now(),
            clock.active_weight(),
            done.iter().map(|c| (c.id, c.time)).collect::<Vec<_>>()
        );
    }

    // a late arrival joins at the current virtual time
    let tag = clock.on_arrival(5.0, 3, 1.0, 4.0).unwrap();
    println!("job 3 arrives at t=5 with tag {tag}");
    println!("it finishes at {:?}", clock.next_virtual_completion());
}
