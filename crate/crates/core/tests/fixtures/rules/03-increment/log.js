db.Patients.insertOne({_id: "p1", age: 42})
db.Patients.insertOne({_id: "p2", age: 51})
db.Patients.insertOne({_id: "p3", age: 7})
