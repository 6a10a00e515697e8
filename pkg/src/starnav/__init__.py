"""Star-world motion control: workspace modification, guiding fields and tunnel MPC."""
