db.Patients.insertOne({_id: "p1", age: 42, address: {city: "Toulouse", zip: "31000"}})
db.Patients.insertOne({_id: "p2", age: 30, address: {city: "Paris"}})
db.Patients.updateOne({_id: "p1"}, {$unset: {address: ""}})
